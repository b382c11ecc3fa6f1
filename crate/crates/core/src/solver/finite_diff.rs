use crate::error::{Error, Result};
use crate::model::SolutionVector;

/// Central-difference gradient `(f(x + h e_i) - f(x - h e_i)) / 2h` over
/// every rate and Werner coordinate of `x`.
///
/// Werner parameters must stay inside `(0, 1)` and rates positive at both
/// probe points.
pub fn finite_diff_gradient<F>(f: F, x: &SolutionVector, h: f64) -> Result<SolutionVector>
where
    F: Fn(&SolutionVector) -> Result<f64>,
{
    if !(h > 0.0) {
        return Err(Error::Domain {
            quantity: "step",
            value: h,
            domain: "(0, inf)",
        });
    }
    let boundary = |quantity: &'static str, value: f64| Error::Domain {
        quantity,
        value,
        domain: "at least one step away from the boundary",
    };
    if let Some(&w) = x.werner.values().find(|&&w| !(w > h && w < 1.0 - h)) {
        return Err(boundary("werner parameter", w));
    }
    if let Some(&r) = x.rates.values().find(|&&r| !(r > h)) {
        return Err(boundary("rate", r));
    }

    let mut probe = x.clone();
    let mut gradient = SolutionVector::default();
    for key in x.rates.keys() {
        let base = x.rates[key];
        probe.rates.insert(key.clone(), base + h);
        let up = f(&probe)?;
        probe.rates.insert(key.clone(), base - h);
        let down = f(&probe)?;
        probe.rates.insert(key.clone(), base);
        gradient.rates.insert(key.clone(), (up - down) / (2.0 * h));
    }
    for key in x.werner.keys() {
        let base = x.werner[key];
        probe.werner.insert(key.clone(), base + h);
        let up = f(&probe)?;
        probe.werner.insert(key.clone(), base - h);
        let down = f(&probe)?;
        probe.werner.insert(key.clone(), base);
        gradient.werner.insert(key.clone(), (up - down) / (2.0 * h));
    }
    Ok(gradient)
}
