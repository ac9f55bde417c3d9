//! Text formatting shared by the CSV and JSON writers.

/// `v` with 17 significant digits (trailing zeros dropped), which always
/// parses back to the same `f64`.
///
/// Fixed notation is used for magnitudes in `[1e-5, 1e16)`, exponent notation
/// otherwise. Non-finite values print as `inf`, `-inf` and `nan`.
pub fn real17(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0".into();
    }
    let mag = v.abs();
    if (1e-5..1e16).contains(&mag) {
        let exp10 = mag.log10().floor() as i32;
        let mut prec = (16 - exp10).max(0) as usize;
        loop {
            let s = trim_fraction(format!("{v:.prec$}"));
            if s.parse::<f64>().ok() == Some(v) || prec > 40 {
                return s;
            }
            prec += 1;
        }
    }
    let s = format!("{v:.16e}");
    let (mantissa, exp) = s.split_once('e').expect("exponent form");
    format!("{}e{exp}", trim_fraction(mantissa.to_string()))
}

fn trim_fraction(s: String) -> String {
    if !s.contains('.') {
        return s;
    }
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}
