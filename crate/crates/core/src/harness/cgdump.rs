use std::fmt::Write as _;
use std::path::Path;

use crate::so3::{cg_block, check_ell};
use crate::Result;

/// One Clebsch-Gordan coefficient `<l1 m1; l2 m2 | l m>`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CgEntry {
    pub l1: usize,
    pub l2: usize,
    pub l: usize,
    pub m1: i64,
    pub m2: i64,
    pub m: i64,
    pub value: f64,
}

/// Every non-zero coefficient with `l1, l2 <= lmax` and `l <= L_CG`, ordered by
/// `(l1, l2, l, m1, m2)`.
pub fn cg_table(lmax: usize) -> Result<Vec<CgEntry>> {
    check_ell(lmax)?;
    let mut out = Vec::new();
    for l1 in 0..=lmax {
        for l2 in 0..=lmax {
            for l in l1.abs_diff(l2)..=(l1 + l2).min(crate::so3::L_CG) {
                let block = cg_block(l1, l2, l)?;
                let d2 = 2 * l2 + 1;
                let mut entries: Vec<CgEntry> = block
                    .matrix
                    .indexed_iter()
                    .filter(|(_, v)| **v != 0.0)
                    .map(|((row, col), v)| CgEntry {
                        l1,
                        l2,
                        l,
                        m1: (col / d2) as i64 - l1 as i64,
                        m2: (col % d2) as i64 - l2 as i64,
                        m: row as i64 - l as i64,
                        value: *v,
                    })
                    .collect();
                entries.sort_by_key(|e| (e.m1, e.m2));
                out.extend(entries);
            }
        }
    }
    Ok(out)
}

/// Writes [`cg_table`] as a JSON array; values carry 17 significant digits.
pub fn write_cg_table(lmax: usize, path: &Path) -> Result<usize> {
    let table = cg_table(lmax)?;
    let mut s = String::from("[\n");
    for (i, e) in table.iter().enumerate() {
        let sep = if i + 1 == table.len() { "" } else { "," };
        writeln!(
            s,
            "  {{\"l1\": {}, \"l2\": {}, \"l\": {}, \"m1\": {}, \"m2\": {}, \"m\": {}, \"value\": {:.16e}}}{sep}",
            e.l1, e.l2, e.l, e.m1, e.m2, e.m, e.value
        )
        .expect("writing to a string");
    }
    s.push_str("]\n");
    std::fs::write(path, s)?;
    Ok(table.len())
}
