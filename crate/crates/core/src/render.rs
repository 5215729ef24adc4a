//! Static basin rendering: one binary P6 PPM pixel per grid cell.
//!
//! Pixels run row-major from the (lo, lo) corner of the box. Resolved cells
//! take the fixed palette color of their end, unresolved cells are gray, and
//! recurrent cells are overlaid black. A vertex at infinity has no pixel.

use std::fs;
use std::io;
use std::path::Path;

use crate::ends::{BasinAssignment, BasinMap, ComponentPartition};

/// Unresolved cells.
pub const UNRESOLVED_GRAY: [u8; 3] = [128, 128, 128];
/// Recurrent-cell overlay.
pub const RECURRENT_BLACK: [u8; 3] = [0, 0, 0];

const PALETTE: [[u8; 3]; 12] = [
    [230, 25, 75],
    [60, 180, 75],
    [255, 225, 25],
    [0, 130, 200],
    [245, 130, 48],
    [145, 30, 180],
    [70, 240, 240],
    [240, 50, 230],
    [210, 245, 60],
    [250, 190, 212],
    [0, 128, 128],
    [220, 190, 255],
];

/// Deterministic color of an end id.
pub fn end_color(end: usize) -> [u8; 3] {
    PALETTE[end % PALETTE.len()]
}

/// Renders the basin map over a `dims[0] × dims[1]` grid into PPM bytes.
///
/// `end_of_component` maps finest-level component ids to end ids. When
/// `overlay` is given, recurrent cells are painted black on top of their
/// basin color.
pub fn basins_to_ppm(
    dims: [usize; 2],
    basins: &BasinMap,
    end_of_component: &[Option<usize>],
    overlay: Option<&ComponentPartition>,
) -> Vec<u8> {
    let [nx, ny] = dims;
    let mut out = format!("P6\n{nx} {ny}\n255\n").into_bytes();
    for cell in 0..nx * ny {
        let color = if overlay.and_then(|p| p.component_of(cell)).is_some() {
            RECURRENT_BLACK
        } else {
            match basins.assignment(cell) {
                BasinAssignment::Resolved(c) => match end_of_component[*c] {
                    Some(end) => end_color(end),
                    None => UNRESOLVED_GRAY,
                },
                BasinAssignment::Unresolved(_) => UNRESOLVED_GRAY,
            }
        };
        out.extend_from_slice(&color);
    }
    out
}

/// Writes the basin image to a file.
pub fn render_basins_ppm(
    dims: [usize; 2],
    basins: &BasinMap,
    end_of_component: &[Option<usize>],
    overlay: Option<&ComponentPartition>,
    path: &Path,
) -> io::Result<()> {
    fs::write(path, basins_to_ppm(dims, basins, end_of_component, overlay))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ends::{assign_basins, recurrent_components};
    use crate::graph::FlowGraph;
    use std::collections::BTreeSet;

    fn pixels(bytes: &[u8], n: usize) -> Vec<[u8; 3]> {
        let header_end = bytes
            .windows(4)
            .position(|w| w == b"255\n")
            .expect("maxval header")
            + 4;
        let body = &bytes[header_end..];
        assert_eq!(body.len(), 3 * n);
        body.chunks(3).map(|c| [c[0], c[1], c[2]]).collect()
    }

    #[test]
    fn uniform_basin_renders_identical_pixels() {
        let basins = BasinMap::from_assignments(vec![BasinAssignment::Resolved(0); 4], 1);
        let bytes = basins_to_ppm([2, 2], &basins, &[Some(0)], None);
        assert!(bytes.starts_with(b"P6\n2 2\n255\n"));
        let px = pixels(&bytes, 4);
        assert!(px.iter().all(|p| *p == end_color(0)));
    }

    #[test]
    fn split_basins_use_three_colors() {
        // two resolved basins and an unresolved seam
        let assignment = vec![
            BasinAssignment::Resolved(0),
            BasinAssignment::Resolved(0),
            BasinAssignment::Unresolved(vec![0, 1]),
            BasinAssignment::Unresolved(vec![0, 1]),
            BasinAssignment::Resolved(1),
            BasinAssignment::Resolved(1),
        ];
        let basins = BasinMap::from_assignments(assignment, 2);
        let bytes = basins_to_ppm([3, 2], &basins, &[Some(0), Some(1)], None);
        let px = pixels(&bytes, 6);
        let distinct: BTreeSet<[u8; 3]> = px.into_iter().collect();
        assert_eq!(distinct.len(), 3);
        assert!(distinct.contains(&UNRESOLVED_GRAY));
        assert!(distinct.contains(&end_color(0)));
        assert!(distinct.contains(&end_color(1)));
    }

    #[test]
    fn recurrent_cells_render_black() {
        // every cell recurrent: the overlay wins everywhere
        let g = FlowGraph::new(
            4,
            &[(0, 0), (1, 1), (2, 2), (3, 3)],
            &[(0, 1), (1, 2), (2, 3)],
        )
        .unwrap();
        let p = recurrent_components(&g);
        let basins = assign_basins(&g, &p);
        let bytes = basins_to_ppm([2, 2], &basins, &[Some(0)], Some(&p));
        let px = pixels(&bytes, 4);
        assert!(px.iter().all(|c| *c == RECURRENT_BLACK));
    }
}
