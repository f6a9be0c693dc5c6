/// Round to four significant digits for display.
pub fn sig4(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let mag = x.abs().log10().floor() as i32;
    let scale = 10f64.powi(mag - 3);
    let rounded = (x / scale).round() * scale;
    let mag = rounded.abs().log10().floor() as i32;
    if !(-4..6).contains(&mag) {
        return format!("{rounded:.3e}");
    }
    let decimals = (3 - mag).max(0) as usize;
    format!("{rounded:.decimals$}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn four_significant_digits() {
        assert_eq!(sig4(0.0028999), "0.002900");
        assert_eq!(sig4(16.587), "16.59");
        assert_eq!(sig4(5720.0), "5720");
        assert_eq!(sig4(123456.7), "123500");
        assert_eq!(sig4(9.99961), "10.00");
        assert_eq!(sig4(-1.23456), "-1.235");
        assert_eq!(sig4(1.99795e-5), "1.998e-5");
        assert_eq!(sig4(0.0), "0");
    }
}
