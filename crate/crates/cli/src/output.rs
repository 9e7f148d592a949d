use std::fs::File;
use std::io::{self, Write};
use std::path::Path;

/// `%.12g`: 12 significant digits, trailing zeros dropped, exponent form
/// outside `1e-4 <= |x| < 1e12`.
pub fn fmt_g(x: f64) -> String {
    const DIGITS: i32 = 12;
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{:.*e}", (DIGITS - 1) as usize, x);
    let (mant, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= DIGITS {
        let mant = trim(mant);
        format!("{mant}e{}{:02}", if exp < 0 { '-' } else { '+' }, exp.abs())
    } else {
        trim(&format!("{:.*}", (DIGITS - 1 - exp).max(0) as usize, x)).to_string()
    }
}

fn trim(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// A CSV table with `# key=value` provenance lines above the header.
pub struct Csv {
    pub provenance: Vec<(String, String)>,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Csv {
    pub fn new(provenance: Vec<(String, String)>, header: &[&'static str]) -> Csv {
        Csv {
            provenance,
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn row(&mut self, cells: Vec<String>) {
        debug_assert_eq!(cells.len(), self.header.len());
        self.rows.push(cells);
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.provenance {
            s.push_str(&format!("# {k}={v}\n"));
        }
        s.push_str(&self.header.join(","));
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.join(","));
            s.push('\n');
        }
        s
    }

    /// Writes to `out`, or stdout when absent.
    pub fn write(&self, out: Option<&Path>) -> io::Result<()> {
        let text = self.render();
        match out {
            Some(p) => File::create(p)?.write_all(text.as_bytes()),
            None => io::stdout().write_all(text.as_bytes()),
        }
    }
}

pub fn g(x: f64) -> String {
    fmt_g(x)
}

pub fn s(x: impl ToString) -> String {
    x.to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn g_format() {
        assert_eq!(fmt_g(0.5), "0.5");
        assert_eq!(fmt_g(1.0), "1");
        assert_eq!(fmt_g(1.0 / 3.0), "0.333333333333");
        assert_eq!(fmt_g(123456.0), "123456");
        assert_eq!(fmt_g(1e-5), "1e-05");
        assert_eq!(fmt_g(2.5e13), "2.5e+13");
        assert_eq!(fmt_g(-0.000123), "-0.000123");
        assert_eq!(fmt_g(999999999999.5), "1e+12");
    }
}
