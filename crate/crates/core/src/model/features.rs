//! Per-point geometric + color features.
//!
//! Each point gets an 8-dimensional vector: height above the cloud's
//! ground estimate (5th percentile z), the neighborhood normal's vertical
//! component, planarity and linearity (covariance eigenvalue ratios),
//! normalized neighbor density and the RGB channels scaled to [0, 1]
//! (zeroed in the D modality). Neighborhoods follow the `ball_query`
//! contract exactly -- the first `max_neighbors` qualifying indices in
//! ascending order -- but are found through a voxel grid so full scene
//! clouds stay tractable.

use std::collections::HashMap;

use rayon::prelude::*;

use crate::cloud::Rgb;
use crate::geom::Point3;
use crate::sampler::Modality;

pub const FEATURE_DIM: usize = 8;

/// Neighborhood parameters for feature extraction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureParams {
    pub radius: f64,
    pub max_neighbors: usize,
}

impl Default for FeatureParams {
    fn default() -> Self {
        FeatureParams { radius: 0.8, max_neighbors: 64 }
    }
}

/// Jacobi eigendecomposition of a symmetric 3x3 matrix. Returns the
/// eigenvalues in descending order and the matching unit eigenvectors.
pub(crate) fn eigh3(mut a: [[f64; 3]; 3]) -> ([f64; 3], [[f64; 3]; 3]) {
    let mut v = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    for _ in 0..50 {
        let off = a[0][1].abs() + a[0][2].abs() + a[1][2].abs();
        if off < 1e-15 {
            break;
        }
        for (p, q) in [(0usize, 1usize), (0, 2), (1, 2)] {
            if a[p][q].abs() < 1e-300 {
                continue;
            }
            let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
            let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
            let c = 1.0 / (t * t + 1.0).sqrt();
            let s = t * c;
            for k in 0..3 {
                let akp = a[k][p];
                let akq = a[k][q];
                a[k][p] = c * akp - s * akq;
                a[k][q] = s * akp + c * akq;
            }
            for k in 0..3 {
                let apk = a[p][k];
                let aqk = a[q][k];
                a[p][k] = c * apk - s * aqk;
                a[q][k] = s * apk + c * aqk;
            }
            for k in 0..3 {
                let vkp = v[k][p];
                let vkq = v[k][q];
                v[k][p] = c * vkp - s * vkq;
                v[k][q] = s * vkp + c * vkq;
            }
        }
    }
    // Sort eigenpairs by descending eigenvalue; eigenvectors are the
    // columns of v.
    let mut order = [0usize, 1, 2];
    order.sort_by(|&i, &j| a[j][j].partial_cmp(&a[i][i]).unwrap());
    let values = [a[order[0]][order[0]], a[order[1]][order[1]], a[order[2]][order[2]]];
    let mut vectors = [[0.0; 3]; 3];
    for (slot, &col) in order.iter().enumerate() {
        for k in 0..3 {
            vectors[slot][k] = v[k][col];
        }
    }
    (values, vectors)
}

fn cell_of(p: &Point3, inv_cell: f64) -> (i64, i64, i64) {
    (
        (p.x() * inv_cell).floor() as i64,
        (p.y() * inv_cell).floor() as i64,
        (p.z() * inv_cell).floor() as i64,
    )
}

/// Voxel grid over points with cell size = radius; neighbor queries merge
/// the 27 surrounding cell lists in ascending index order, reproducing the
/// linear-scan `ball_query` result.
struct NeighborGrid<'a> {
    points: &'a [Point3],
    cells: HashMap<(i64, i64, i64), Vec<u32>>,
    inv_cell: f64,
}

impl<'a> NeighborGrid<'a> {
    fn new(points: &'a [Point3], radius: f64) -> NeighborGrid<'a> {
        let inv_cell = 1.0 / radius;
        let mut cells: HashMap<(i64, i64, i64), Vec<u32>> = HashMap::new();
        for (i, p) in points.iter().enumerate() {
            cells.entry(cell_of(p, inv_cell)).or_default().push(i as u32);
        }
        NeighborGrid { points, cells, inv_cell }
    }

    /// First `cap` indices within `radius` of `center`, ascending.
    fn query(&self, center: Point3, radius: f64, cap: usize, out: &mut Vec<u32>) {
        out.clear();
        let r_sq = radius * radius;
        let (cx, cy, cz) = cell_of(&center, self.inv_cell);
        // Cursors over the (up to) 27 candidate cell lists.
        let mut lists: [&[u32]; 27] = [&[]; 27];
        let mut count = 0;
        for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    if let Some(list) = self.cells.get(&(cx + dx, cy + dy, cz + dz)) {
                        lists[count] = list;
                        count += 1;
                    }
                }
            }
        }
        let lists = &lists[..count];
        let mut cursors = [0usize; 27];
        loop {
            // Smallest index across all cursors.
            let mut best_list = usize::MAX;
            let mut best_index = u32::MAX;
            for (li, list) in lists.iter().enumerate() {
                if let Some(&idx) = list.get(cursors[li]) {
                    if idx < best_index {
                        best_index = idx;
                        best_list = li;
                    }
                }
            }
            if best_list == usize::MAX {
                return;
            }
            cursors[best_list] += 1;
            if self.points[best_index as usize].distance_sq(center) <= r_sq {
                out.push(best_index);
                if out.len() == cap {
                    return;
                }
            }
        }
    }
}

/// z value below which 5% of the cloud lies (nearest-rank percentile);
/// the per-cloud ground elevation estimate.
fn ground_estimate(positions: &[Point3]) -> f64 {
    let mut zs: Vec<f64> = positions.iter().map(|p| p.z()).collect();
    let k = (((zs.len() - 1) as f64) * 0.05).round() as usize;
    let (_, kth, _) = zs.select_nth_unstable_by(k, |a, b| a.partial_cmp(b).unwrap());
    *kth
}

/// Computes one feature vector per point. `colors` feeds the RGB channels
/// only in the RGB-D modality; D zeroes them regardless.
pub fn extract_features(
    positions: &[Point3],
    colors: Option<&[Rgb]>,
    modality: Modality,
    params: &FeatureParams,
) -> Vec<[f64; FEATURE_DIM]> {
    if positions.is_empty() {
        return Vec::new();
    }
    let ground_z = ground_estimate(positions);
    let grid = NeighborGrid::new(positions, params.radius);
    let use_color = matches!(modality, Modality::RgbD) && colors.is_some();

    positions
        .par_iter()
        .enumerate()
        .map_init(Vec::new, |scratch, (i, &p)| {
            grid.query(p, params.radius, params.max_neighbors, scratch);
            let count = scratch.len();
            let density = count as f64 / params.max_neighbors as f64;

            let (normal_z, planarity, linearity) = if count >= 3 {
                let mut mean = Point3::ORIGIN;
                for &n in scratch.iter() {
                    mean = mean.add(positions[n as usize]);
                }
                mean = mean.scale(1.0 / count as f64);
                let mut cov = [[0.0f64; 3]; 3];
                for &n in scratch.iter() {
                    let d = positions[n as usize].sub(mean);
                    let d = [d.x(), d.y(), d.z()];
                    for r in 0..3 {
                        for c in 0..3 {
                            cov[r][c] += d[r] * d[c];
                        }
                    }
                }
                for row in cov.iter_mut() {
                    for value in row.iter_mut() {
                        *value /= count as f64;
                    }
                }
                let (values, vectors) = eigh3(cov);
                if values[0] > 1e-12 {
                    (
                        vectors[2][2].abs().min(1.0),
                        ((values[1] - values[2]) / values[0]).clamp(0.0, 1.0),
                        ((values[0] - values[1]) / values[0]).clamp(0.0, 1.0),
                    )
                } else {
                    (0.0, 0.0, 0.0)
                }
            } else {
                (0.0, 0.0, 0.0)
            };

            let (r, g, b) = if use_color {
                let c = colors.unwrap()[i];
                (c.r as f64 / 255.0, c.g as f64 / 255.0, c.b as f64 / 255.0)
            } else {
                (0.0, 0.0, 0.0)
            };

            [
                p.z() - ground_z,
                normal_z,
                planarity,
                linearity,
                density,
                r,
                g,
                b,
            ]
        })
        .collect()
}
