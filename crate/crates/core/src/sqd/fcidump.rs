//! FCIDUMP integral files.

use std::fmt::Write as _;

use crate::error::{Error, Result};

/// Largest spatial-orbital count; each spin sector is a `u64` mask.
pub const MAX_ORBITALS: usize = 64;

/// Integrals of a second-quantized electronic Hamiltonian in an orthonormal
/// spatial-orbital basis, in Hartree.
#[derive(Clone, Debug, PartialEq)]
pub struct FciData {
    pub norb: usize,
    pub nelec: usize,
    /// `2 S_z`.
    pub ms2: i64,
    /// `h_pq`, row-major `norb x norb`.
    h: Vec<f64>,
    /// `(pq|rs)` in chemists' notation, `norb^4` entries.
    eri: Vec<f64>,
    pub core_energy: f64,
}

impl FciData {
    /// Empty integral tables for `norb` orbitals.
    pub fn new(norb: usize, nelec: usize, ms2: i64) -> Result<Self> {
        if norb == 0 || norb > MAX_ORBITALS {
            return Err(Error::arg(format!("NORB={norb} outside 1..={MAX_ORBITALS}")));
        }
        if nelec > 2 * norb || ms2.unsigned_abs() as usize > nelec || (nelec as i64 + ms2) % 2 != 0 {
            return Err(Error::arg(format!("NELEC={nelec}, MS2={ms2} inconsistent with NORB={norb}")));
        }
        let data = Self {
            norb,
            nelec,
            ms2,
            h: vec![0.0; norb * norb],
            eri: vec![0.0; norb.pow(4)],
            core_energy: 0.0,
        };
        let (na, nb) = data.sector_electrons();
        if na > norb || nb > norb {
            return Err(Error::arg(format!("NELEC={nelec}, MS2={ms2} overfill {norb} orbitals")));
        }
        Ok(data)
    }

    /// `(N_alpha, N_beta)`.
    pub fn sector_electrons(&self) -> (usize, usize) {
        let na = (self.nelec as i64 + self.ms2) / 2;
        (na as usize, self.nelec - na as usize)
    }

    /// Number of spin orbitals `M = 2 norb`.
    pub fn num_spin_orbitals(&self) -> usize {
        2 * self.norb
    }

    pub fn h(&self, p: usize, q: usize) -> f64 {
        self.h[p * self.norb + q]
    }

    pub fn eri(&self, p: usize, q: usize, r: usize, s: usize) -> f64 {
        self.eri[self.eri_index(p, q, r, s)]
    }

    fn eri_index(&self, p: usize, q: usize, r: usize, s: usize) -> usize {
        ((p * self.norb + q) * self.norb + r) * self.norb + s
    }

    /// Sets `h_pq = h_qp`.
    pub fn set_h(&mut self, p: usize, q: usize, value: f64) {
        self.h[p * self.norb + q] = value;
        self.h[q * self.norb + p] = value;
    }

    /// Sets `(pq|rs)` and its eight symmetry partners.
    pub fn set_eri(&mut self, p: usize, q: usize, r: usize, s: usize, value: f64) {
        for (a, b, c, d) in [
            (p, q, r, s),
            (q, p, r, s),
            (p, q, s, r),
            (q, p, s, r),
            (r, s, p, q),
            (s, r, p, q),
            (r, s, q, p),
            (s, r, q, p),
        ] {
            let i = self.eri_index(a, b, c, d);
            self.eri[i] = value;
        }
    }
}

/// Parses an FCIDUMP document. Indices are 1-based; `i j 0 0` records are
/// one-electron integrals, `0 0 0 0` is the core energy and `i 0 0 0`
/// orbital energies are ignored.
pub fn parse_fcidump(text: &str) -> Result<FciData> {
    let mut lines = text.lines().enumerate().map(|(k, l)| (k + 1, l));
    let mut header = String::new();
    let mut header_line = 0;
    loop {
        let (no, line) = lines.next().ok_or_else(|| Error::parse(header_line.max(1), "missing &END"))?;
        if header.is_empty() && line.trim().is_empty() {
            continue;
        }
        if header.is_empty() {
            header_line = no;
            if !line.trim_start().to_ascii_uppercase().starts_with("&FCI") {
                return Err(Error::parse(no, "expected &FCI header"));
            }
        }
        header.push(' ');
        header.push_str(line);
        let upper = line.trim().to_ascii_uppercase();
        if upper.ends_with("&END") || upper == "/" || upper.ends_with(" /") || upper.ends_with(",/") {
            break;
        }
    }
    let header_fields = parse_header(&header, header_line)?;
    let field = |key: &str| header_fields.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_slice());
    let scalar = |key: &str, default: Option<i64>| -> Result<i64> {
        match field(key) {
            Some([v, ..]) => v
                .parse::<i64>()
                .map_err(|_| Error::parse(header_line, format!("{key}={v} is not an integer"))),
            _ => default.ok_or_else(|| Error::parse(header_line, format!("missing {key}"))),
        }
    };
    let norb = scalar("NORB", None)?;
    let nelec = scalar("NELEC", None)?;
    let ms2 = scalar("MS2", Some(0))?;
    if norb <= 0 || nelec < 0 {
        return Err(Error::parse(header_line, "NORB must be positive and NELEC non-negative"));
    }
    let mut data =
        FciData::new(norb as usize, nelec as usize, ms2).map_err(|e| Error::parse(header_line, e.to_string()))?;

    for (no, line) in lines {
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        if fields.len() != 5 {
            return Err(Error::parse(no, format!("expected 5 fields, found {}", fields.len())));
        }
        let value: f64 = fields[0]
            .replace(['D', 'd'], "E")
            .parse()
            .map_err(|_| Error::parse(no, format!("bad value {:?}", fields[0])))?;
        let mut idx = [0usize; 4];
        for (slot, f) in idx.iter_mut().zip(&fields[1..]) {
            let i: usize = f.parse().map_err(|_| Error::parse(no, format!("bad index {f:?}")))?;
            if i > data.norb {
                return Err(Error::parse(no, format!("index {i} exceeds NORB={}", data.norb)));
            }
            *slot = i;
        }
        match idx {
            [0, 0, 0, 0] => data.core_energy = value,
            [i, 0, 0, 0] if i > 0 => {}
            [i, j, 0, 0] if i > 0 && j > 0 => data.set_h(i - 1, j - 1, value),
            [i, j, k, l] if i > 0 && j > 0 && k > 0 && l > 0 => data.set_eri(i - 1, j - 1, k - 1, l - 1, value),
            _ => return Err(Error::parse(no, format!("unsupported index pattern {idx:?}"))),
        }
    }
    Ok(data)
}

/// `KEY=v1,v2,...` pairs of the namelist header.
fn parse_header(header: &str, line: usize) -> Result<Vec<(String, Vec<String>)>> {
    let body = header.trim();
    let body = body[4..].trim_end();
    let body = body
        .strip_suffix("&END")
        .or_else(|| body.strip_suffix("&end"))
        .or_else(|| body.strip_suffix('/'))
        .unwrap_or(body);
    let mut fields: Vec<(String, Vec<String>)> = Vec::new();
    for token in body.split([',', ' ', '\t']).filter(|t| !t.is_empty()) {
        match token.split_once('=') {
            Some((key, value)) => {
                let key = key.trim().to_ascii_uppercase();
                if key.is_empty() {
                    return Err(Error::parse(line, "header entry without a key"));
                }
                let values = if value.is_empty() { vec![] } else { vec![value.to_string()] };
                fields.push((key, values));
            }
            None => match fields.last_mut() {
                Some((_, values)) => values.push(token.to_string()),
                None => return Err(Error::parse(line, format!("unexpected header token {token:?}"))),
            },
        }
    }
    Ok(fields)
}

/// Canonical FCIDUMP text: unique `(ij|kl)` with `i>=j`, `k>=l`, `ij>=kl`,
/// then `h_ij` with `i>=j`, then the core energy. Zero integrals are omitted.
pub fn write_fcidump(data: &FciData) -> String {
    let n = data.norb;
    let mut out = format!(
        "&FCI NORB={},NELEC={},MS2={},\n ORBSYM={}\n ISYM=1,\n&END\n",
        n,
        data.nelec,
        data.ms2,
        "1,".repeat(n)
    );
    let pair = |i: usize, j: usize| i * (i + 1) / 2 + j;
    for i in 0..n {
        for j in 0..=i {
            for k in 0..n {
                for l in 0..=k {
                    if pair(i, j) < pair(k, l) {
                        continue;
                    }
                    let v = data.eri(i, j, k, l);
                    if v != 0.0 {
                        writeln!(out, "{v:e} {} {} {} {}", i + 1, j + 1, k + 1, l + 1).unwrap();
                    }
                }
            }
        }
    }
    for i in 0..n {
        for j in 0..=i {
            let v = data.h(i, j);
            if v != 0.0 {
                writeln!(out, "{v:e} {} {} 0 0", i + 1, j + 1).unwrap();
            }
        }
    }
    writeln!(out, "{:e} 0 0 0 0", data.core_energy).unwrap();
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const H2: &str = "&FCI NORB=  2,NELEC=2,MS2=0,
  ORBSYM=1,1,
  ISYM=1,
 &END
  0.6746 1 1 1 1
  0.1813 2 1 2 1
  0.6636 2 2 1 1
  0.6975 2 2 2 2
 -1.2528 1 1 0 0
 -0.4759 2 2 0 0
 -0.5 1 0 0 0
  0.7137 0 0 0 0
";

    #[test]
    fn reads_a_small_file() {
        let d = parse_fcidump(H2).unwrap();
        assert_eq!((d.norb, d.nelec, d.ms2), (2, 2, 0));
        assert_eq!(d.core_energy, 0.7137);
        assert_eq!(d.h(1, 1), -0.4759);
        assert_eq!(d.eri(0, 1, 0, 1), 0.1813);
        assert_eq!(d.eri(1, 0, 0, 1), 0.1813);
        assert_eq!(d.eri(1, 1, 0, 0), d.eri(0, 0, 1, 1));
        assert_eq!(d.sector_electrons(), (1, 1));
    }

    #[test]
    fn round_trip_is_exact() {
        let d = parse_fcidump(H2).unwrap();
        let text = write_fcidump(&d);
        assert_eq!(parse_fcidump(&text).unwrap(), d);
        assert_eq!(write_fcidump(&parse_fcidump(&text).unwrap()), text);
    }

    #[test]
    fn fortran_exponents_and_slash_terminator() {
        let text = "&FCI NORB=1, NELEC=1, MS2=1 /\n 2.5D-01 1 1 0 0\n";
        let d = parse_fcidump(text).unwrap();
        assert_eq!(d.h(0, 0), 0.25);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let bad_index = H2.replace("0.6975 2 2 2 2", "0.6975 2 3 2 2");
        assert_eq!(parse_fcidump(&bad_index).unwrap_err(), Error::Parse { line: 8, message: "index 3 exceeds NORB=2".into() });
        let bad_value = H2.replace("0.6975", "abc");
        assert!(matches!(parse_fcidump(&bad_value), Err(Error::Parse { line: 8, .. })));
        assert!(matches!(parse_fcidump("NORB=2\n"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse_fcidump("&FCI NELEC=2 &END\n"), Err(Error::Parse { line: 1, .. })));
        let short = H2.replace("0.6975 2 2 2 2", "0.6975 2 2 2");
        assert!(matches!(parse_fcidump(&short), Err(Error::Parse { line: 8, .. })));
        assert!(parse_fcidump("&FCI NORB=1,NELEC=3 &END\n").is_err());
    }
}
