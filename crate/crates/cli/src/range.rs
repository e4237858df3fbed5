//! `a:b` and `a:b:step` flag syntax.

pub fn parse_pair(text: &str) -> Result<(f64, f64), String> {
    let (a, b) = text
        .split_once(':')
        .ok_or_else(|| format!("expected `min:max`, got `{text}`"))?;
    let num = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|_| format!("`{s}` is not a number"))
    };
    Ok((num(a)?, num(b)?))
}

/// Inclusive integer span `a:b` (step 1) or `a:b:step`.
pub fn parse_span(text: &str) -> Result<Vec<usize>, String> {
    let parts: Vec<&str> = text.split(':').collect();
    let num = |s: &str| {
        s.trim()
            .parse::<usize>()
            .map_err(|_| format!("`{s}` is not a nonnegative integer"))
    };
    let (lo, hi, step) = match parts.as_slice() {
        [a, b] => (num(a)?, num(b)?, 1),
        [a, b, s] => (num(a)?, num(b)?, num(s)?),
        _ => return Err(format!("expected `a:b` or `a:b:step`, got `{text}`")),
    };
    if step == 0 {
        return Err("step must be positive".into());
    }
    if lo > hi {
        return Err(format!("empty range {lo}:{hi}"));
    }
    Ok((lo..=hi).step_by(step).collect())
}

/// A span or a comma-separated list; orders must be positive.
pub fn parse_orders(text: &str) -> Result<Vec<usize>, String> {
    let orders = if text.contains(':') {
        parse_span(text)?
    } else {
        text.split(',')
            .map(|s| {
                s.trim()
                    .parse::<usize>()
                    .map_err(|_| format!("`{s}` is not an order"))
            })
            .collect::<Result<Vec<_>, _>>()?
    };
    if orders.is_empty() {
        return Err("no orders given".into());
    }
    if orders.contains(&0) {
        return Err("orders must be at least 1".into());
    }
    Ok(orders)
}
