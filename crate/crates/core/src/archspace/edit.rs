use super::{encode_cell, ArchError, CellGraph, SearchSpaceSpec};

/// Hamming distance between the padded matrix encodings under the fixed
/// node ordering: differing strict-upper-triangle adjacency entries plus
/// rows whose operation label differs (padding counts as its own label).
pub fn edit_distance(a: &CellGraph, b: &CellGraph, spec: &SearchSpaceSpec) -> Result<usize, ArchError> {
    let ea = encode_cell(a, spec)?;
    let eb = encode_cell(b, spec)?;
    let n = spec.max_nodes;
    let mut d = 0;
    for i in 0..n {
        for j in (i + 1)..n {
            d += usize::from(ea.adj(i, j) != eb.adj(i, j));
        }
        d += usize::from(ea.op_label(i) != eb.op_label(i));
    }
    Ok(d)
}

/// Edit distance between cells that may come from different spaces;
/// errors unless both specs are identical.
pub fn edit_distance_checked(
    a: (&CellGraph, &SearchSpaceSpec),
    b: (&CellGraph, &SearchSpaceSpec),
) -> Result<usize, ArchError> {
    if a.1 != b.1 {
        return Err(ArchError::SpecMismatch(a.1.name.clone(), b.1.name.clone()));
    }
    edit_distance(a.0, b.0, a.1)
}
