//! Cell list over the box `[0, L)³` with free boundaries.

use crate::geom::Vec3;

#[derive(Debug, Clone)]
pub struct CellList {
    side: f64,
    per_axis: usize,
    cells: Vec<Vec<usize>>,
    owner: Vec<usize>,
}

impl CellList {
    /// Cells of side at least `reach`, so every pair closer than `reach`
    /// sits in adjacent cells.
    pub fn new(positions: &[Vec3], l: f64, reach: f64) -> Self {
        let per_axis = ((l / reach).floor() as usize).max(1);
        let side = l / per_axis as f64;
        let mut list = Self {
            side,
            per_axis,
            cells: vec![Vec::new(); per_axis.pow(3)],
            owner: vec![0; positions.len()],
        };
        for (i, x) in positions.iter().enumerate() {
            let c = list.cell_of(x);
            list.cells[c].push(i);
            list.owner[i] = c;
        }
        list
    }

    fn coords(&self, x: &Vec3) -> [usize; 3] {
        x.map(|c| ((c / self.side).floor().max(0.0) as usize).min(self.per_axis - 1))
    }

    fn cell_of(&self, x: &Vec3) -> usize {
        let [a, b, c] = self.coords(x);
        (c * self.per_axis + b) * self.per_axis + a
    }

    /// Records that particle `i` moved to `x`.
    pub fn update(&mut self, i: usize, x: &Vec3) {
        let c = self.cell_of(x);
        let old = self.owner[i];
        if c != old {
            let slot = self.cells[old]
                .iter()
                .position(|&p| p == i)
                .expect("particle is listed");
            self.cells[old].swap_remove(slot);
            self.cells[c].push(i);
            self.owner[i] = c;
        }
    }

    /// Every particle in the 27 cells around `x`, in a fixed order.
    pub fn candidates(&self, x: &Vec3, out: &mut Vec<usize>) {
        out.clear();
        let m = self.per_axis as isize;
        let [a, b, c] = self.coords(x).map(|k| k as isize);
        for cz in (c - 1).max(0)..=(c + 1).min(m - 1) {
            for cy in (b - 1).max(0)..=(b + 1).min(m - 1) {
                for cx in (a - 1).max(0)..=(a + 1).min(m - 1) {
                    let idx = ((cz * m + cy) * m + cx) as usize;
                    out.extend_from_slice(&self.cells[idx]);
                }
            }
        }
    }
}
