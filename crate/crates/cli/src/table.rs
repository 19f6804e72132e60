use std::fs::File;
use std::io::{self, Write};
use std::path::Path;

/// `%.12g`: twelve significant digits, trailing zeros trimmed, exponent form
/// outside `[1e-4, 1e12)`.
pub fn fmt_float(x: f64) -> String {
    const PREC: i32 = 12;
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.*e}", (PREC - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("exponent digits");
    if exp < -4 || exp >= PREC {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mantissa), exp.abs())
    } else {
        trim_zeros(&format!("{:.*}", (PREC - 1 - exp) as usize, x)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub struct Table {
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Self { header: header.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn write_to<W: Write>(&self, w: W) -> io::Result<()> {
        let mut out = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
        out.write_record(&self.header)?;
        for r in &self.rows {
            out.write_record(r)?;
        }
        out.flush()
    }

    pub fn save(&self, path: Option<&Path>) -> io::Result<()> {
        match path {
            Some(p) => self.write_to(io::BufWriter::new(File::create(p)?)),
            None => self.write_to(io::stdout().lock()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_format() {
        assert_eq!(fmt_float(0.0), "0");
        assert_eq!(fmt_float(1.0), "1");
        assert_eq!(fmt_float(-2.5), "-2.5");
        assert_eq!(fmt_float(0.1), "0.1");
        assert_eq!(fmt_float(1.0 / 3.0), "0.333333333333");
        assert_eq!(fmt_float(123456.0), "123456");
        assert_eq!(fmt_float(1e-5), "1e-05");
        assert_eq!(fmt_float(2.5e-13), "2.5e-13");
        assert_eq!(fmt_float(1e12), "1e+12");
        assert_eq!(fmt_float(999999999999.0), "999999999999");
        assert_eq!(fmt_float(0.0001), "0.0001");
        assert_eq!(fmt_float(f64::INFINITY), "inf");
        assert_eq!(fmt_float(f64::NAN), "nan");
    }

    #[test]
    fn csv_uses_lf_and_quotes_when_needed() {
        let mut t = Table::new(&["a", "b"]);
        t.push(vec!["1".into(), "x=1;y=2".into()]);
        t.push(vec!["2".into(), "has,comma".into()]);
        let mut buf = Vec::new();
        t.write_to(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "a,b\n1,x=1;y=2\n2,\"has,comma\"\n");
    }
}
