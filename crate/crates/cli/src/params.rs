use crate::error::{CliError, Result};

/// Parses `start:stop:step` (inclusive of `stop` up to rounding) or a
/// comma-separated list.
pub fn parse_params(text: &str) -> Result<Vec<f64>> {
    let invalid = |why: &str| CliError::Invalid(format!("invalid parameter list `{text}`: {why}"));
    let number = |s: &str| {
        s.trim()
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| invalid(&format!("`{}` is not a finite number", s.trim())))
    };

    let values = if text.contains(':') {
        let parts: Vec<&str> = text.split(':').collect();
        let [start, stop, step] = parts[..] else {
            return Err(invalid("a range needs exactly start:stop:step"));
        };
        let (start, stop, step) = (number(start)?, number(stop)?, number(step)?);
        if step <= 0.0 {
            return Err(invalid("step must be positive"));
        }
        if stop < start {
            return Err(invalid("stop is below start"));
        }
        let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
        if count > 1_000_000 {
            return Err(invalid("range has more than a million points"));
        }
        (0..count).map(|i| start + i as f64 * step).collect()
    } else {
        text.split(',').map(number).collect::<Result<Vec<_>>>()?
    };
    if values.is_empty() {
        return Err(invalid("no values"));
    }
    Ok(values)
}
