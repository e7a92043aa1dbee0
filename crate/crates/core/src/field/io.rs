//! Serialization of [`AxiField`]s.
//!
//! Binary (`AXIF`), little-endian:
//! - header: magic `AXIF`, version (u32), Nr (u32), Nz (u32);
//! - flags (u64): bit 0 cylindrical chart, bit 1 equatorially symmetric;
//! - f64 arrays: radial nodes (Nr), vertical nodes (Nz), vertical weights
//!   (Nz), values (Nr·Nz, row-major), then the support radius.
//!
//! Text: `#` header lines `chart`, `support_radius`, `symmetric` and
//! `vertical_weights`, then a `r,zeta,value` table in row-major order.

use std::collections::HashMap;
use std::io::{BufRead, Read, Write};

use super::{AxiField, AxiGrid, Chart};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"AXIF";
pub const VERSION: u32 = 1;

const FLAG_CYLINDRICAL: u64 = 1;
const FLAG_SYMMETRIC: u64 = 2;

fn format_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Format(msg.into()))
}

pub fn write_binary(field: &AxiField, mut out: impl Write) -> Result<()> {
    let (nr, nz) = (field.nr() as u32, field.nz() as u32);
    out.write_all(MAGIC)?;
    for v in [VERSION, nr, nz] {
        out.write_all(&v.to_le_bytes())?;
    }
    let mut flags = 0u64;
    if field.grid.chart == Chart::Cylindrical {
        flags |= FLAG_CYLINDRICAL;
    }
    if field.is_equatorially_symmetric() {
        flags |= FLAG_SYMMETRIC;
    }
    out.write_all(&flags.to_le_bytes())?;
    let g = &field.grid;
    for v in g.radial.iter().chain(&g.vertical).chain(&g.vertical_weights).chain(&field.values) {
        out.write_all(&v.to_le_bytes())?;
    }
    out.write_all(&field.support_radius.to_le_bytes())?;
    Ok(())
}

fn read_exact<const N: usize>(input: &mut impl Read) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    input.read_exact(&mut buf).map_err(|e| Error::Format(format!("truncated AXIF data: {e}")))?;
    Ok(buf)
}

fn read_f64s(input: &mut impl Read, n: usize) -> Result<Vec<f64>> {
    (0..n).map(|_| Ok(f64::from_le_bytes(read_exact::<8>(input)?))).collect()
}

pub fn read_binary(mut input: impl Read) -> Result<AxiField> {
    let magic = read_exact::<4>(&mut input)?;
    if &magic != MAGIC {
        return format_err("missing AXIF magic");
    }
    let version = u32::from_le_bytes(read_exact::<4>(&mut input)?);
    if version != VERSION {
        return format_err(format!("unsupported AXIF version {version}"));
    }
    let nr = u32::from_le_bytes(read_exact::<4>(&mut input)?) as usize;
    let nz = u32::from_le_bytes(read_exact::<4>(&mut input)?) as usize;
    let flags = u64::from_le_bytes(read_exact::<8>(&mut input)?);
    if flags & !(FLAG_CYLINDRICAL | FLAG_SYMMETRIC) != 0 {
        return format_err(format!("unknown AXIF flags {flags:#x}"));
    }
    let chart = if flags & FLAG_CYLINDRICAL != 0 { Chart::Cylindrical } else { Chart::RZeta };
    let radial = read_f64s(&mut input, nr)?;
    let vertical = read_f64s(&mut input, nz)?;
    let weights = read_f64s(&mut input, nz)?;
    let values = read_f64s(&mut input, nr * nz)?;
    let support = read_f64s(&mut input, 1)?[0];
    let mut rest = Vec::new();
    input.read_to_end(&mut rest)?;
    if !rest.is_empty() {
        return format_err(format!("{} trailing bytes after AXIF body", rest.len()));
    }
    let field = AxiField::new(AxiGrid::new(chart, radial, vertical, weights)?, values, support)?;
    if flags & FLAG_SYMMETRIC != 0 {
        field.mark_symmetric()
    } else {
        Ok(field)
    }
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:e}")).collect::<Vec<_>>().join(" ")
}

pub fn write_text(field: &AxiField, mut out: impl Write) -> Result<()> {
    let chart = match field.grid.chart {
        Chart::RZeta => "rzeta",
        Chart::Cylindrical => "cylindrical",
    };
    let header = if field.grid.chart == Chart::RZeta { "r,zeta,value" } else { "varpi,z,value" };
    writeln!(out, "# chart {chart}")?;
    writeln!(out, "# support_radius {:e}", field.support_radius)?;
    writeln!(out, "# symmetric {}", field.is_equatorially_symmetric())?;
    writeln!(out, "# vertical_weights {}", join(&field.grid.vertical_weights))?;
    writeln!(out, "{header}")?;
    for (k, [a, b]) in field.grid.points().into_iter().enumerate() {
        writeln!(out, "{a:e},{b:e},{:e}", field.values[k])?;
    }
    Ok(())
}

fn parse_f64(s: &str, line: usize) -> Result<f64> {
    s.trim().parse().map_err(|_| Error::Format(format!("line {line}: cannot parse number '{s}'")))
}

pub fn read_text(input: impl BufRead) -> Result<AxiField> {
    let mut meta: HashMap<String, String> = HashMap::new();
    let mut rows: Vec<[f64; 3]> = Vec::new();
    let mut seen_header = false;
    for (n, line) in input.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        if let Some(c) = t.strip_prefix('#') {
            let mut it = c.trim().splitn(2, char::is_whitespace);
            if let Some(key) = it.next() {
                meta.insert(key.to_string(), it.next().unwrap_or("").trim().to_string());
            }
            continue;
        }
        if !seen_header && t.chars().next().is_some_and(|c| c.is_alphabetic()) {
            seen_header = true;
            continue;
        }
        let cols: Vec<&str> = t.split(',').collect();
        if cols.len() != 3 {
            return format_err(format!("line {}: expected 3 columns, got {}", n + 1, cols.len()));
        }
        rows.push([parse_f64(cols[0], n + 1)?, parse_f64(cols[1], n + 1)?, parse_f64(cols[2], n + 1)?]);
    }
    if rows.is_empty() {
        return format_err("no data rows");
    }
    let nz = rows.iter().take_while(|p| p[0] == rows[0][0]).count();
    if rows.len() % nz != 0 {
        return format_err("rows do not form a rectangular grid");
    }
    let nr = rows.len() / nz;
    let radial: Vec<f64> = (0..nr).map(|i| rows[i * nz][0]).collect();
    let vertical: Vec<f64> = rows[..nz].iter().map(|p| p[1]).collect();
    for (k, p) in rows.iter().enumerate() {
        if p[0] != radial[k / nz] || p[1] != vertical[k % nz] {
            return format_err(format!("row {} breaks the row-major grid layout", k + 1));
        }
    }
    let chart = match meta.get("chart").map(String::as_str) {
        None | Some("rzeta") => Chart::RZeta,
        Some("cylindrical") => Chart::Cylindrical,
        Some(other) => return format_err(format!("unknown chart '{other}'")),
    };
    let weights = match meta.get("vertical_weights") {
        Some(s) => s.split_whitespace().map(|w| parse_f64(w, 0)).collect::<Result<Vec<_>>>()?,
        None if chart == Chart::RZeta => {
            let grid = AxiGrid::rzeta(radial.clone(), nz)?;
            if grid.vertical.iter().zip(&vertical).any(|(a, b)| (a - b).abs() > 1e-12) {
                return format_err("zeta nodes are not Gauss-Legendre nodes and no weights were given");
            }
            grid.vertical_weights
        }
        None => return format_err("cylindrical table needs vertical_weights"),
    };
    let support = match meta.get("support_radius") {
        Some(s) => parse_f64(s, 0)?,
        None => f64::INFINITY,
    };
    let values = rows.iter().map(|p| p[2]).collect();
    let field = AxiField::new(AxiGrid::new(chart, radial, vertical, weights)?, values, support)?;
    match meta.get("symmetric").map(String::as_str) {
        Some("true") => field.mark_symmetric(),
        None | Some("false") => Ok(field),
        Some(other) => format_err(format!("bad symmetric flag '{other}'")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> AxiField {
        let g = AxiGrid::rzeta(AxiGrid::cell_centred(5, 1.0), 4).unwrap();
        AxiField::from_fn(g, 1.0, |r, z| (1.0 - r * r) * (1.0 + z * z)).unwrap().mark_symmetric().unwrap()
    }

    #[test]
    fn binary_round_trip() {
        let f = sample();
        let mut buf = Vec::new();
        write_binary(&f, &mut buf).unwrap();
        assert_eq!(&buf[..4], b"AXIF");
        assert_eq!(u32::from_le_bytes(buf[8..12].try_into().unwrap()), 5);
        assert_eq!(buf.len(), 16 + 8 + 8 * (5 + 4 + 4 + 20 + 1));
        let g = read_binary(&buf[..]).unwrap();
        assert_eq!(f, g);
        assert!(g.is_equatorially_symmetric());
    }

    #[test]
    fn binary_rejects_corruption() {
        let mut buf = Vec::new();
        write_binary(&sample(), &mut buf).unwrap();
        assert!(matches!(read_binary(&buf[..buf.len() - 3]), Err(Error::Format(_))));
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(matches!(read_binary(&bad[..]), Err(Error::Format(_))));
        let mut extra = buf;
        extra.push(0);
        assert!(matches!(read_binary(&extra[..]), Err(Error::Format(_))));
    }

    #[test]
    fn text_round_trip() {
        let f = sample();
        let mut buf = Vec::new();
        write_text(&f, &mut buf).unwrap();
        let g = read_text(&buf[..]).unwrap();
        assert_eq!(f.grid.radial, g.grid.radial);
        for (a, b) in f.values.iter().zip(&g.values) {
            assert!((a - b).abs() <= 1e-15 * a.abs().max(1.0));
        }
        assert!(g.is_equatorially_symmetric());
        assert_eq!(g.support_radius, 1.0);
    }

    #[test]
    fn text_without_metadata_uses_gauss_nodes() {
        let f = sample();
        let mut s = String::from("r,zeta,value\n");
        for (k, [a, b]) in f.grid.points().into_iter().enumerate() {
            s.push_str(&format!("{a:e},{b:e},{:e}\n", f.values[k]));
        }
        let g = read_text(s.as_bytes()).unwrap();
        assert_eq!(g.support_radius, f64::INFINITY);
        assert!(read_text("r,zeta,value\n0.5,0.1,1\n0.5,0.2\n".as_bytes()).is_err());
    }
}
