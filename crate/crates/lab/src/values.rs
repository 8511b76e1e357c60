//! Parsers for the compound values that appear in config files: generator
//! specs, complex numbers, angle lists and site spectra.

use capsule_core::encoding::Generator;
use capsule_core::linalg::CMatrix;
use num_complex::Complex64;
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValueError(pub String);

impl fmt::Display for ValueError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ValueError {}

fn err<T>(msg: impl Into<String>) -> Result<T, ValueError> {
    Err(ValueError(msg.into()))
}

/// Splits on `sep` at parenthesis depth zero, trimming each piece.
/// Empty input gives an empty list.
pub fn split_top(text: &str, sep: char) -> Result<Vec<&str>, ValueError> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, c) in text.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => {
                depth -= 1;
                if depth < 0 {
                    return err("unbalanced ')'");
                }
            }
            c if c == sep && depth == 0 => {
                out.push(text[start..i].trim());
                start = i + c.len_utf8();
            }
            _ => {}
        }
    }
    if depth != 0 {
        return err("unbalanced '('");
    }
    let last = text[start..].trim();
    if !(out.is_empty() && last.is_empty()) {
        out.push(last);
    }
    if out.iter().any(|s| s.is_empty()) {
        return err("empty list element");
    }
    Ok(out)
}

pub fn parse_f64(text: &str) -> Result<f64, ValueError> {
    let v: f64 = text.trim().parse().map_err(|_| ValueError(format!("'{text}' is not a number")))?;
    if !v.is_finite() {
        return err(format!("'{text}' is not finite"));
    }
    Ok(v)
}

/// `1.5`, `pi`, `-pi/2`, `2pi/3`, `2*pi/3`.
pub fn parse_angle(text: &str) -> Result<f64, ValueError> {
    let t = text.trim();
    let Some(pos) = t.find("pi") else {
        return parse_f64(t);
    };
    let coeff = t[..pos].trim().trim_end_matches('*').trim();
    let coeff = match coeff {
        "" | "+" => 1.0,
        "-" => -1.0,
        c => parse_f64(c)?,
    };
    let rest = t[pos + 2..].trim();
    let denom = if rest.is_empty() {
        1.0
    } else if let Some(d) = rest.strip_prefix('/') {
        parse_f64(d)?
    } else {
        return err(format!("cannot parse angle '{t}'"));
    };
    if denom == 0.0 {
        return err(format!("zero denominator in '{t}'"));
    }
    Ok(coeff * std::f64::consts::PI / denom)
}

pub fn parse_list<T>(text: &str, item: impl Fn(&str) -> Result<T, ValueError>) -> Result<Vec<T>, ValueError> {
    split_top(text, ',')?.into_iter().map(item).collect()
}

pub fn parse_usize(text: &str) -> Result<usize, ValueError> {
    text.trim().parse().map_err(|_| ValueError(format!("'{text}' is not a non-negative integer")))
}

pub fn parse_u64(text: &str) -> Result<u64, ValueError> {
    text.trim().parse().map_err(|_| ValueError(format!("'{text}' is not a non-negative integer")))
}

pub fn parse_bool(text: &str) -> Result<bool, ValueError> {
    match text.trim() {
        "true" => Ok(true),
        "false" => Ok(false),
        other => err(format!("'{other}' is not true or false")),
    }
}

/// `2`, `-0.5`, `1.5i`, `-i`, `1+2i`, `3-0.5i`, `1e-3+2e-1i`.
pub fn parse_complex(text: &str) -> Result<Complex64, ValueError> {
    let t = text.trim();
    if t.is_empty() {
        return err("empty complex number");
    }
    let Some(body) = t.strip_suffix('i') else {
        return Ok(Complex64::new(parse_f64(t)?, 0.0));
    };
    // Split point: the last sign that is not leading and not an exponent sign.
    let bytes = body.as_bytes();
    let mut split = None;
    for i in (1..bytes.len()).rev() {
        if (bytes[i] == b'+' || bytes[i] == b'-') && !matches!(bytes[i - 1], b'e' | b'E') {
            split = Some(i);
            break;
        }
    }
    let imag = |s: &str| -> Result<f64, ValueError> {
        match s {
            "" | "+" => Ok(1.0),
            "-" => Ok(-1.0),
            s => parse_f64(s),
        }
    };
    match split {
        Some(i) => Ok(Complex64::new(parse_f64(&body[..i])?, imag(&body[i..])?)),
        None => Ok(Complex64::new(0.0, imag(body)?)),
    }
}

/// Shortest text that [`parse_complex`] maps back to the same value.
pub fn format_complex(z: Complex64) -> String {
    if z.im == 0.0 {
        format!("{:?}", z.re)
    } else if z.re == 0.0 {
        format!("{:?}i", z.im)
    } else if z.im.is_sign_negative() {
        format!("{:?}{:?}i", z.re, z.im)
    } else {
        format!("{:?}+{:?}i", z.re, z.im)
    }
}

/// Textual generator description.
///
/// ```text
/// pauli-z-like            diag(+1, −1)
/// pauli-x-like            [[0, 1], [1, 0]]
/// pauli-y-like            [[0, −i], [i, 0]]
/// clock(d)                diag((d−1)/2, …, −(d−1)/2)
/// spectrum(w1 w2 …)       diag(w), traceless
/// matrix(a b; c d)        explicit Hermitian traceless matrix, complex entries
/// ```
#[derive(Debug, Clone, PartialEq)]
pub enum GeneratorSpec {
    PauliZ,
    PauliX,
    PauliY,
    Clock(usize),
    Spectrum(Vec<f64>),
    Matrix(Vec<Vec<Complex64>>),
}

impl GeneratorSpec {
    pub fn build(&self) -> Result<Generator, ValueError> {
        let wrap = |e: capsule_core::error::Error| ValueError(e.to_string());
        let z = |re: f64, im: f64| Complex64::new(re, im);
        match self {
            GeneratorSpec::PauliZ => Ok(Generator::pauli_z_like()),
            GeneratorSpec::PauliX => Generator::new(CMatrix::from_row_slice(2, 2, &[z(0., 0.), z(1., 0.), z(1., 0.), z(0., 0.)])).map_err(wrap),
            GeneratorSpec::PauliY => Generator::new(CMatrix::from_row_slice(2, 2, &[z(0., 0.), z(0., -1.), z(0., 1.), z(0., 0.)])).map_err(wrap),
            GeneratorSpec::Clock(d) => Generator::clock(*d).map_err(wrap),
            GeneratorSpec::Spectrum(w) => Generator::from_spectrum(w).map_err(wrap),
            GeneratorSpec::Matrix(rows) => {
                let d = rows.len();
                if rows.iter().any(|r| r.len() != d) {
                    return err("generator matrix must be square");
                }
                Generator::new(CMatrix::from_fn(d, d, |i, j| rows[i][j])).map_err(wrap)
            }
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            GeneratorSpec::PauliZ | GeneratorSpec::PauliX | GeneratorSpec::PauliY => 2,
            GeneratorSpec::Clock(d) => *d,
            GeneratorSpec::Spectrum(w) => w.len(),
            GeneratorSpec::Matrix(rows) => rows.len(),
        }
    }
}

fn inner<'a>(text: &'a str, head: &str) -> Option<&'a str> {
    text.strip_prefix(head)?.trim_start().strip_prefix('(')?.strip_suffix(')')
}

impl FromStr for GeneratorSpec {
    type Err = ValueError;

    fn from_str(text: &str) -> Result<Self, ValueError> {
        let t = text.trim();
        match t {
            "pauli-z-like" => return Ok(GeneratorSpec::PauliZ),
            "pauli-x-like" => return Ok(GeneratorSpec::PauliX),
            "pauli-y-like" => return Ok(GeneratorSpec::PauliY),
            _ => {}
        }
        if let Some(body) = inner(t, "clock") {
            let d = parse_usize(body)?;
            if d < 2 {
                return err("clock dimension must be at least 2");
            }
            return Ok(GeneratorSpec::Clock(d));
        }
        if let Some(body) = inner(t, "spectrum") {
            let w = body.split_whitespace().map(parse_f64).collect::<Result<Vec<_>, _>>()?;
            if w.len() < 2 {
                return err("spectrum needs at least 2 eigenvalues");
            }
            return Ok(GeneratorSpec::Spectrum(w));
        }
        if let Some(body) = inner(t, "matrix") {
            let rows = body
                .split(';')
                .map(|row| row.split_whitespace().map(parse_complex).collect::<Result<Vec<_>, _>>())
                .collect::<Result<Vec<_>, _>>()?;
            if rows.len() < 2 || rows.iter().any(|r| r.len() != rows.len()) {
                return err("matrix must be square with dimension at least 2");
            }
            return Ok(GeneratorSpec::Matrix(rows));
        }
        err(format!("unknown generator '{t}' (try pauli-z-like, clock(3), spectrum(1 -1), matrix(0 1; 1 0))"))
    }
}

impl fmt::Display for GeneratorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GeneratorSpec::PauliZ => f.write_str("pauli-z-like"),
            GeneratorSpec::PauliX => f.write_str("pauli-x-like"),
            GeneratorSpec::PauliY => f.write_str("pauli-y-like"),
            GeneratorSpec::Clock(d) => write!(f, "clock({d})"),
            GeneratorSpec::Spectrum(w) => {
                let parts: Vec<String> = w.iter().map(|x| format!("{x:?}")).collect();
                write!(f, "spectrum({})", parts.join(" "))
            }
            GeneratorSpec::Matrix(rows) => {
                let rows: Vec<String> = rows
                    .iter()
                    .map(|r| r.iter().map(|z| format_complex(*z)).collect::<Vec<_>>().join(" "))
                    .collect();
                write!(f, "matrix({})", rows.join("; "))
            }
        }
    }
}

/// Per-site energies: one spectrum shared by all sites, or one per site
/// separated by `;`.
#[derive(Debug, Clone, PartialEq)]
pub enum SiteSpectra {
    Uniform(Vec<f64>),
    PerSite(Vec<Vec<f64>>),
}

impl SiteSpectra {
    /// Expands to N site spectra of length d.
    pub fn expand(&self, d: usize, n_qudits: usize) -> Result<Vec<Vec<f64>>, ValueError> {
        let out = match self {
            SiteSpectra::Uniform(s) => vec![s.clone(); n_qudits],
            SiteSpectra::PerSite(v) => {
                if v.len() != n_qudits {
                    return err(format!("{} site spectra given for {n_qudits} qudits", v.len()));
                }
                v.clone()
            }
        };
        if let Some(bad) = out.iter().find(|s| s.len() != d) {
            return err(format!("site spectrum of length {} does not match d = {d}", bad.len()));
        }
        Ok(out)
    }
}

impl FromStr for SiteSpectra {
    type Err = ValueError;

    fn from_str(text: &str) -> Result<Self, ValueError> {
        let rows = text
            .split(';')
            .map(|row| row.split_whitespace().map(parse_f64).collect::<Result<Vec<_>, _>>())
            .collect::<Result<Vec<_>, _>>()?;
        if rows.iter().any(|r| r.is_empty()) {
            return err("empty site spectrum");
        }
        Ok(if rows.len() == 1 { SiteSpectra::Uniform(rows.into_iter().next().unwrap_or_default()) } else { SiteSpectra::PerSite(rows) })
    }
}

impl fmt::Display for SiteSpectra {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let row = |r: &Vec<f64>| r.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(" ");
        match self {
            SiteSpectra::Uniform(s) => f.write_str(&row(s)),
            SiteSpectra::PerSite(v) => f.write_str(&v.iter().map(row).collect::<Vec<_>>().join("; ")),
        }
    }
}

/// Initial computational basis state of the register.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InitialState {
    /// |0⋯0⟩
    Zeros,
    /// |0⋯01⟩, one excitation on the last qudit.
    LastExcited,
    Digits(Vec<usize>),
}

impl InitialState {
    pub fn digits(&self, d: usize, n_qudits: usize) -> Result<Vec<usize>, ValueError> {
        match self {
            InitialState::Zeros => Ok(vec![0; n_qudits]),
            InitialState::LastExcited => {
                let mut v = vec![0; n_qudits];
                if let Some(last) = v.last_mut() {
                    *last = 1;
                }
                Ok(v)
            }
            InitialState::Digits(v) => {
                if v.len() != n_qudits {
                    return err(format!("{} initial digits given for {n_qudits} qudits", v.len()));
                }
                if let Some(bad) = v.iter().find(|&&x| x >= d) {
                    return err(format!("initial digit {bad} out of range for d = {d}"));
                }
                Ok(v.clone())
            }
        }
    }
}

impl FromStr for InitialState {
    type Err = ValueError;

    fn from_str(text: &str) -> Result<Self, ValueError> {
        match text.trim() {
            "zeros" => Ok(InitialState::Zeros),
            "last-excited" => Ok(InitialState::LastExcited),
            t => {
                let v = t.split_whitespace().map(parse_usize).collect::<Result<Vec<_>, _>>()?;
                if v.is_empty() {
                    return err("initial state needs zeros, last-excited or a digit list");
                }
                Ok(InitialState::Digits(v))
            }
        }
    }
}

impl fmt::Display for InitialState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitialState::Zeros => f.write_str("zeros"),
            InitialState::LastExcited => f.write_str("last-excited"),
            InitialState::Digits(v) => f.write_str(&v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn angles() {
        assert_eq!(parse_angle("pi").unwrap(), PI);
        assert_eq!(parse_angle("pi/3").unwrap(), PI / 3.0);
        assert_eq!(parse_angle("2pi/3").unwrap(), 2.0 * PI / 3.0);
        assert_eq!(parse_angle("2*pi/3").unwrap(), 2.0 * PI / 3.0);
        assert_eq!(parse_angle("-pi/2").unwrap(), -PI / 2.0);
        assert_eq!(parse_angle(" 0.3 ").unwrap(), 0.3);
        assert!(parse_angle("pi/0").is_err());
        assert!(parse_angle("pix").is_err());
        assert!(parse_angle("inf").is_err());
    }

    #[test]
    fn complex_numbers() {
        assert_eq!(parse_complex("2").unwrap(), Complex64::new(2.0, 0.0));
        assert_eq!(parse_complex("-i").unwrap(), Complex64::new(0.0, -1.0));
        assert_eq!(parse_complex("1.5i").unwrap(), Complex64::new(0.0, 1.5));
        assert_eq!(parse_complex("1+2i").unwrap(), Complex64::new(1.0, 2.0));
        assert_eq!(parse_complex("3-0.5i").unwrap(), Complex64::new(3.0, -0.5));
        assert_eq!(parse_complex("1e-3+2e-1i").unwrap(), Complex64::new(1e-3, 0.2));
        assert_eq!(parse_complex("-1e-3-i").unwrap(), Complex64::new(-1e-3, -1.0));
        for z in [Complex64::new(0.1, -0.3), Complex64::new(-2.0, 0.0), Complex64::new(0.0, 1e-20)] {
            assert_eq!(parse_complex(&format_complex(z)).unwrap(), z);
        }
        assert!(parse_complex("1+").is_err());
    }

    #[test]
    fn generator_specs() {
        for text in ["pauli-z-like", "pauli-x-like", "pauli-y-like", "clock(3)", "spectrum(0.5 -0.5)", "matrix(0 1-2i; 1+2i 0)"] {
            let g: GeneratorSpec = text.parse().unwrap();
            assert_eq!(g.to_string().parse::<GeneratorSpec>().unwrap(), g);
            assert!(g.build().is_ok(), "{text}");
        }
        assert!("matrix(1 0; 0 1)".parse::<GeneratorSpec>().unwrap().build().is_err());
        assert!("matrix(0 1; 1)".parse::<GeneratorSpec>().is_err());
        assert!("clock(1)".parse::<GeneratorSpec>().is_err());
        assert!("nope".parse::<GeneratorSpec>().is_err());
    }

    #[test]
    fn lists_respect_parentheses() {
        let v = split_top("clock(3), spectrum(1 0 -1) ,pauli-z-like", ',').unwrap();
        assert_eq!(v, vec!["clock(3)", "spectrum(1 0 -1)", "pauli-z-like"]);
        assert!(split_top("a,,b", ',').is_err());
        assert!(split_top("(a", ',').is_err());
        assert_eq!(split_top("  ", ',').unwrap(), Vec::<&str>::new());
    }

    #[test]
    fn site_spectra() {
        let s: SiteSpectra = "0 1".parse().unwrap();
        assert_eq!(s.expand(2, 3).unwrap(), vec![vec![0.0, 1.0]; 3]);
        let s: SiteSpectra = "0 1; 0 2".parse().unwrap();
        assert!(s.expand(2, 3).is_err());
        assert_eq!(s.to_string().parse::<SiteSpectra>().unwrap(), s);
        assert!("0 1;".parse::<SiteSpectra>().is_err());
    }

    #[test]
    fn initial_states() {
        assert_eq!("last-excited".parse::<InitialState>().unwrap().digits(2, 3).unwrap(), vec![0, 0, 1]);
        assert!("0 2".parse::<InitialState>().unwrap().digits(2, 2).is_err());
        assert!("".parse::<InitialState>().is_err());
    }
}
