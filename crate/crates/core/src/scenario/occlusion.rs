use serde::{Deserialize, Serialize};

/// Building footprints, rasterised onto a square grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OcclusionConfig {
    /// Grid cell edge (m).
    pub cell_size: f64,
    /// Axis-aligned occluders as `[x_min, y_min, x_max, y_max]` in metres.
    pub blocks: Vec<[f64; 4]>,
}

impl Default for OcclusionConfig {
    fn default() -> Self {
        Self {
            cell_size: 10.0,
            blocks: vec![
                [60.0, 40.0, 100.0, 90.0],
                [110.0, 190.0, 150.0, 230.0],
                [200.0, 80.0, 240.0, 130.0],
                [210.0, 230.0, 260.0, 270.0],
            ],
        }
    }
}

/// Boolean occupancy grid covering the arena; `true` marks an occluded cell.
#[derive(Debug, Clone, PartialEq)]
pub struct OcclusionGrid {
    pub nx: usize,
    pub ny: usize,
    pub cell_size: f64,
    cells: Vec<bool>,
}

impl OcclusionGrid {
    pub fn empty(arena: [f64; 2], cell_size: f64) -> Self {
        let nx = (arena[0] / cell_size).ceil().max(1.0) as usize;
        let ny = (arena[1] / cell_size).ceil().max(1.0) as usize;
        Self {
            nx,
            ny,
            cell_size,
            cells: vec![false; nx * ny],
        }
    }

    /// A cell is occluded when its centre lies inside any block.
    pub fn from_config(arena: [f64; 2], cfg: &OcclusionConfig) -> Self {
        let mut grid = Self::empty(arena, cfg.cell_size);
        for iy in 0..grid.ny {
            for ix in 0..grid.nx {
                let [cx, cy] = grid.cell_center(ix, iy);
                let hit = cfg
                    .blocks
                    .iter()
                    .any(|b| cx >= b[0] && cx <= b[2] && cy >= b[1] && cy <= b[3]);
                grid.set(ix, iy, hit);
            }
        }
        grid
    }

    pub fn set(&mut self, ix: usize, iy: usize, occluded: bool) {
        self.cells[iy * self.nx + ix] = occluded;
    }

    pub fn is_occluded(&self, ix: usize, iy: usize) -> bool {
        self.cells[iy * self.nx + ix]
    }

    pub fn cell_center(&self, ix: usize, iy: usize) -> [f64; 2] {
        [
            (ix as f64 + 0.5) * self.cell_size,
            (iy as f64 + 0.5) * self.cell_size,
        ]
    }

    pub fn cell_of(&self, p: [f64; 2]) -> Option<(usize, usize)> {
        if p[0] < 0.0 || p[1] < 0.0 {
            return None;
        }
        let ix = (p[0] / self.cell_size).floor() as usize;
        let iy = (p[1] / self.cell_size).floor() as usize;
        // points exactly on the far edge belong to the last cell
        let ix = if ix == self.nx && p[0] <= self.extent()[0] { ix - 1 } else { ix };
        let iy = if iy == self.ny && p[1] <= self.extent()[1] { iy - 1 } else { iy };
        (ix < self.nx && iy < self.ny).then_some((ix, iy))
    }

    pub fn is_occluded_at(&self, p: [f64; 2]) -> bool {
        self.cell_of(p).is_some_and(|(ix, iy)| self.is_occluded(ix, iy))
    }

    pub fn occluded_count(&self) -> usize {
        self.cells.iter().filter(|&&c| c).count()
    }

    fn extent(&self) -> [f64; 2] {
        [
            self.nx as f64 * self.cell_size,
            self.ny as f64 * self.cell_size,
        ]
    }

    /// True when the segment `from → to` crosses no occluded cell.
    ///
    /// The segment is clipped to the grid and walked cell by cell
    /// (Amanatides–Woo), so every traversed cell is visited exactly once.
    pub fn segment_clear(&self, from: [f64; 2], to: [f64; 2]) -> bool {
        let Some((a, b)) = clip_segment(from, to, self.extent()) else {
            return true;
        };
        let cs = self.cell_size;
        let d = [b[0] - a[0], b[1] - a[1]];
        let clamp_idx = |v: f64, n: usize| ((v / cs).floor().max(0.0) as usize).min(n - 1);
        let mut ix = clamp_idx(a[0], self.nx) as isize;
        let mut iy = clamp_idx(a[1], self.ny) as isize;
        let end_x = clamp_idx(b[0], self.nx) as isize;
        let end_y = clamp_idx(b[1], self.ny) as isize;

        let axis = |delta: f64, start: f64, idx: isize| -> (isize, f64, f64) {
            if delta > 0.0 {
                (1, ((idx + 1) as f64 * cs - start) / delta, cs / delta)
            } else if delta < 0.0 {
                (-1, (idx as f64 * cs - start) / delta, -cs / delta)
            } else {
                (0, f64::INFINITY, f64::INFINITY)
            }
        };
        let (step_x, mut t_max_x, t_delta_x) = axis(d[0], a[0], ix);
        let (step_y, mut t_max_y, t_delta_y) = axis(d[1], a[1], iy);

        let max_steps = self.nx + self.ny + 2;
        for _ in 0..=max_steps {
            if self.is_occluded(ix as usize, iy as usize) {
                return false;
            }
            if ix == end_x && iy == end_y {
                break;
            }
            if t_max_x < t_max_y {
                ix += step_x;
                t_max_x += t_delta_x;
            } else {
                iy += step_y;
                t_max_y += t_delta_y;
            }
            if ix < 0 || iy < 0 || ix >= self.nx as isize || iy >= self.ny as isize {
                break;
            }
        }
        true
    }
}

/// Liang–Barsky clip of a segment to `[0, w] × [0, h]`.
fn clip_segment(p0: [f64; 2], p1: [f64; 2], extent: [f64; 2]) -> Option<([f64; 2], [f64; 2])> {
    let d = [p1[0] - p0[0], p1[1] - p0[1]];
    let mut t0 = 0.0_f64;
    let mut t1 = 1.0_f64;
    let checks = [
        (-d[0], p0[0]),
        (d[0], extent[0] - p0[0]),
        (-d[1], p0[1]),
        (d[1], extent[1] - p0[1]),
    ];
    for (p, q) in checks {
        if p == 0.0 {
            if q < 0.0 {
                return None;
            }
        } else {
            let r = q / p;
            if p < 0.0 {
                t0 = t0.max(r);
            } else {
                t1 = t1.min(r);
            }
        }
    }
    if t0 > t1 {
        return None;
    }
    let at = |t: f64| [p0[0] + t * d[0], p0[1] + t * d[1]];
    Some((at(t0), at(t1)))
}
