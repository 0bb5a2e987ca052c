use tfqkd::optimizer::grid_axis;
use tfqkd::SearchBox;

use crate::CliError;

fn number(s: &str, what: &str) -> Result<f64, CliError> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| CliError::Usage(format!("{what}: '{s}' is not a number")))?;
    if !v.is_finite() {
        return Err(CliError::Usage(format!("{what}: '{s}' is not finite")));
    }
    Ok(v)
}

/// `lo:hi:step` (inclusive within half a step) or a single value.
pub fn range(s: &str, what: &str) -> Result<Vec<f64>, CliError> {
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        [v] => Ok(vec![number(v, what)?]),
        [lo, hi, step] => {
            let (lo, hi, step) = (number(lo, what)?, number(hi, what)?, number(step, what)?);
            if !(step > 0.0) || hi < lo {
                return Err(CliError::Usage(format!(
                    "{what}: range {s} needs lo <= hi and step > 0"
                )));
            }
            grid_axis(lo, hi, step).map_err(|e| CliError::Usage(format!("{what}: {e}")))
        }
        _ => Err(CliError::Usage(format!("{what}: expected lo:hi:step, got '{s}'"))),
    }
}

/// Comma-separated values, or a `lo:hi:step` range.
pub fn float_list(s: &str, what: &str) -> Result<Vec<f64>, CliError> {
    if s.contains(':') {
        return range(s, what);
    }
    let values = s.split(',').map(|v| number(v, what)).collect::<Result<Vec<_>, _>>()?;
    if values.is_empty() {
        return Err(CliError::Usage(format!("{what}: empty list")));
    }
    Ok(values)
}

pub fn usize_list(s: &str, what: &str) -> Result<Vec<usize>, CliError> {
    s.split(',')
        .map(|v| {
            v.trim()
                .parse()
                .map_err(|_| CliError::Usage(format!("{what}: '{v}' is not a non-negative integer")))
        })
        .collect()
}

/// `lo:hi` search interval.
pub fn search_box(s: &str, what: &str) -> Result<SearchBox, CliError> {
    let (lo, hi) = s
        .split_once(':')
        .ok_or_else(|| CliError::Usage(format!("{what}: expected lo:hi, got '{s}'")))?;
    SearchBox::new(number(lo, what)?, number(hi, what)?).map_err(|e| CliError::Usage(format!("{what}: {e}")))
}

pub fn strictly_increasing(axis: &[f64], what: &str) -> Result<(), CliError> {
    if axis.iter().any(|&v| !(v > 0.0)) {
        return Err(CliError::Usage(format!("{what}: values must be positive")));
    }
    if axis.windows(2).any(|w| w[1] <= w[0]) {
        return Err(CliError::Usage(format!("{what}: values must be strictly increasing")));
    }
    Ok(())
}
