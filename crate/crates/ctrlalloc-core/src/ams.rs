//! Attainable moment set: images of the deflection box under the
//! effectiveness map, a 3-D convex hull over them, and a least-squares
//! membership oracle.

use alloc::vec;
use alloc::vec::Vec;

use crate::actuator::{EffectiveBounds, EffectivenessMatrix};
use crate::allocators::solve_bvls;
use crate::linalg::{self, Mat};
use crate::{Error, Result};

/// Images of all `2^m` box vertices plus a triangulated convex hull
/// (vertex-index triples, outward-oriented) when the set is
/// three-dimensional.
#[derive(Clone, Debug)]
pub struct MomentSet {
    pub vertices: Vec<Vec<f64>>,
    pub hull_facets: Vec<[usize; 3]>,
}

/// Enumerate the box vertex images and, for `o = 3`, their convex hull.
/// Degenerate (flat or lower-dimensional) images yield an empty facet
/// list. Vertex enumeration caps at `m <= 16`.
pub fn moment_set(b: &EffectivenessMatrix, bounds: &EffectiveBounds) -> Result<MomentSet> {
    let m = b.effectors();
    if bounds.len() != m {
        return Err(Error::Dimension {
            what: "bounds length",
        });
    }
    if m > 16 {
        return Err(Error::Dimension {
            what: "vertex enumeration caps at 16 effectors",
        });
    }
    let bm = b.matrix();
    let count = 1usize << m;
    let mut vertices = Vec::with_capacity(count);
    let mut corner = vec![0.0; m];
    for code in 0..count {
        for i in 0..m {
            corner[i] = if code & (1 << i) != 0 {
                bounds.hi[i]
            } else {
                bounds.lo[i]
            };
        }
        vertices.push(bm.mul_vec(&corner));
    }
    let hull_facets = if b.axes() == 3 {
        convex_hull_3d(&vertices)
    } else {
        Vec::new()
    };
    Ok(MomentSet {
        vertices,
        hull_facets,
    })
}

/// True iff the box can realize `nu` to within `tol`:
/// `min over the box of ||B u - nu||_2 <= tol`, certified by the
/// bounded-variable least-squares solver.
pub fn contains(b: &EffectivenessMatrix, bounds: &EffectiveBounds, nu: &[f64], tol: f64) -> bool {
    let bm = b.matrix();
    debug_assert_eq!(nu.len(), b.axes());
    let max_pivots = 40 * b.effectors() * b.axes().max(1);
    match solve_bvls(bm, nu, &bounds.lo, &bounds.hi, max_pivots, 1e-12) {
        Ok(sol) => {
            let achieved = bm.mul_vec(&sol.x);
            let err: f64 = libm::sqrt(
                nu.iter()
                    .zip(&achieved)
                    .map(|(n, a)| (n - a) * (n - a))
                    .sum(),
            );
            err <= tol
        }
        Err(_) => false,
    }
}

// ---- incremental 3-D convex hull ----------------------------------------

fn cross(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn sub3(a: &[f64], b: &[f64]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn dot3(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

struct Facet {
    v: [usize; 3],
    normal: [f64; 3],
    offset: f64,
}

impl Facet {
    fn new(points: &[Vec<f64>], a: usize, bq: usize, c: usize) -> Self {
        let n = cross(
            &sub3(&points[bq], &points[a]),
            &sub3(&points[c], &points[a]),
        );
        let off = dot3(&n, &[points[a][0], points[a][1], points[a][2]]);
        Facet {
            v: [a, bq, c],
            normal: n,
            offset: off,
        }
    }

    fn signed_dist(&self, p: &[f64]) -> f64 {
        dot3(&self.normal, &[p[0], p[1], p[2]]) - self.offset
    }

    fn flip(&mut self) {
        self.v.swap(1, 2);
        for x in self.normal.iter_mut() {
            *x = -*x;
        }
        self.offset = -self.offset;
    }
}

/// Incremental insertion hull with a coplanarity tolerance scaled to the
/// point cloud extent. Needs at least four affinely independent points;
/// otherwise the facet list is empty.
fn convex_hull_3d(points: &[Vec<f64>]) -> Vec<[usize; 3]> {
    let n = points.len();
    if n < 4 {
        return Vec::new();
    }
    let mut scale = 0.0f64;
    for p in points {
        for &x in p.iter() {
            scale = scale.max(libm::fabs(x));
        }
    }
    let tol = 1e-9 * scale.max(1.0);
    let area_tol = tol * scale.max(1.0);
    let vol_tol = area_tol * scale.max(1.0);

    // Initial simplex: two extreme points, the point farthest off that
    // line, then the point farthest off that plane.
    let (mut i0, mut i1) = (0, 1);
    let mut best = -1.0;
    for axis in 0..3 {
        let lo = (0..n)
            .min_by(|&a, &b| points[a][axis].total_cmp(&points[b][axis]))
            .unwrap();
        let hi = (0..n)
            .max_by(|&a, &b| points[a][axis].total_cmp(&points[b][axis]))
            .unwrap();
        let d = points[hi][axis] - points[lo][axis];
        if d > best {
            best = d;
            i0 = lo;
            i1 = hi;
        }
    }
    if i0 == i1 {
        return Vec::new();
    }
    let dir = sub3(&points[i1], &points[i0]);
    let mut i2 = usize::MAX;
    best = area_tol;
    for k in 0..n {
        let c = cross(&dir, &sub3(&points[k], &points[i0]));
        let area = libm::sqrt(dot3(&c, &c));
        if area > best {
            best = area;
            i2 = k;
        }
    }
    if i2 == usize::MAX {
        return Vec::new();
    }
    let base = Facet::new(points, i0, i1, i2);
    let mut i3 = usize::MAX;
    best = vol_tol;
    for k in 0..n {
        let d = libm::fabs(base.signed_dist(&points[k]));
        if d > best {
            best = d;
            i3 = k;
        }
    }
    if i3 == usize::MAX {
        return Vec::new(); // all points coplanar
    }

    let mut facets: Vec<Facet> = vec![
        Facet::new(points, i0, i1, i2),
        Facet::new(points, i0, i1, i3),
        Facet::new(points, i0, i2, i3),
        Facet::new(points, i1, i2, i3),
    ];
    let centroid = {
        let mut c = [0.0; 3];
        for &i in &[i0, i1, i2, i3] {
            for a in 0..3 {
                c[a] += points[i][a] / 4.0;
            }
        }
        c
    };
    for f in facets.iter_mut() {
        if f.signed_dist(&centroid) > 0.0 {
            f.flip();
        }
    }

    for p in 0..n {
        if p == i0 || p == i1 || p == i2 || p == i3 {
            continue;
        }
        let visible: Vec<usize> = (0..facets.len())
            .filter(|&f| facets[f].signed_dist(&points[p]) > tol)
            .collect();
        if visible.is_empty() {
            continue;
        }
        // Horizon edges: edges of visible facets shared with an unseen one.
        let mut horizon: Vec<(usize, usize)> = Vec::new();
        for &fi in &visible {
            let v = facets[fi].v;
            for e in [(v[0], v[1]), (v[1], v[2]), (v[2], v[0])] {
                let key = (e.0.min(e.1), e.0.max(e.1));
                if let Some(pos) = horizon.iter().position(|&h| h == key) {
                    horizon.swap_remove(pos); // interior edge, seen twice
                } else {
                    horizon.push(key);
                }
            }
        }
        let mut keep: Vec<Facet> = Vec::with_capacity(facets.len());
        for (fi, f) in facets.into_iter().enumerate() {
            if !visible.contains(&fi) {
                keep.push(f);
            }
        }
        facets = keep;
        for (a, bq) in horizon {
            let mut f = Facet::new(points, a, bq, p);
            if f.signed_dist(&centroid) > 0.0 {
                f.flip();
            }
            facets.push(f);
        }
    }

    facets.iter().map(|f| f.v).collect()
}

/// Max hull-face violation of any point; used by tests and the audit.
pub fn hull_max_violation(set: &MomentSet) -> f64 {
    let mut worst = 0.0f64;
    for f in &set.hull_facets {
        let facet = Facet::new(&set.vertices, f[0], f[1], f[2]);
        for p in &set.vertices {
            worst = worst.max(facet.signed_dist(p));
        }
    }
    worst
}

/// Per-axis extent `(min, max)` of the vertex images.
pub fn axis_extents(set: &MomentSet) -> Vec<(f64, f64)> {
    if set.vertices.is_empty() {
        return Vec::new();
    }
    let o = set.vertices[0].len();
    let mut out = vec![(f64::INFINITY, f64::NEG_INFINITY); o];
    for v in &set.vertices {
        for a in 0..o {
            out[a].0 = out[a].0.min(v[a]);
            out[a].1 = out[a].1.max(v[a]);
        }
    }
    out
}

#[allow(dead_code)]
fn norm2(v: &[f64]) -> f64 {
    linalg::norm2(v)
}

#[allow(dead_code)]
fn bm_unused(_: &Mat) {}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::actuator::EffectiveBounds;
    use alloc::vec;

    fn ghgv2() -> EffectivenessMatrix {
        EffectivenessMatrix::from_row_slice(
            3,
            4,
            &[
                -20.01, 20.01, 93.94, -93.94, //
                126.7, 126.7, -501.4, -501.4, //
                -127.5, 127.5, -45.72, 46.72,
            ],
        )
        .unwrap()
    }

    fn box4() -> EffectiveBounds {
        EffectiveBounds {
            lo: vec![0.0; 4],
            hi: vec![20.0; 4],
        }
    }

    #[test]
    fn one_dimensional_set_from_toy_problem() {
        let b = EffectivenessMatrix::from_row_slice(1, 2, &[0.5, -0.5]).unwrap();
        let bounds = EffectiveBounds {
            lo: vec![0.0; 2],
            hi: vec![1.5; 2],
        };
        let set = moment_set(&b, &bounds).unwrap();
        assert_eq!(set.vertices.len(), 4);
        let ext = axis_extents(&set);
        assert!((ext[0].0 + 0.75).abs() < 1e-12);
        assert!((ext[0].1 - 0.75).abs() < 1e-12);
        assert!(set.hull_facets.is_empty());
    }

    #[test]
    fn ghgv2_vertex_count_and_max_pitch() {
        let set = moment_set(&ghgv2(), &box4()).unwrap();
        assert_eq!(set.vertices.len(), 16);
        // max pitch at u = [20, 20, 0, 0]: (126.7 + 126.7) * 20
        let ext = axis_extents(&set);
        assert!((ext[1].1 - 5068.0).abs() < 1e-9);
        assert!(!set.hull_facets.is_empty());
        assert!(hull_max_violation(&set) <= 1e-9 * 2.0e4);
    }

    #[test]
    fn zero_width_box_collapses_to_a_point() {
        let bounds = EffectiveBounds {
            lo: vec![1.0; 4],
            hi: vec![1.0; 4],
        };
        let set = moment_set(&ghgv2(), &bounds).unwrap();
        let first = set.vertices[0].clone();
        for v in &set.vertices {
            for (a, b) in v.iter().zip(&first) {
                assert!((a - b).abs() < 1e-12);
            }
        }
        assert!(set.hull_facets.is_empty());
    }

    #[test]
    fn membership_examples() {
        let b = ghgv2();
        let bounds = box4();
        assert!(contains(&b, &bounds, &[-400.0, 800.0, -2000.0], 1e-6));
        // beyond the certified max pitch vertex image
        let outside = [0.0, 5068.0 * 1.01, 0.0];
        assert!(!contains(&b, &bounds, &outside, 1e-6));
        // centre of the box maps inside
        let centre = b.matrix().mul_vec(&[10.0; 4]);
        assert!(contains(&b, &bounds, &centre, 1e-6));
    }

    #[test]
    fn random_box_points_are_members() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let b = ghgv2();
        let bounds = box4();
        for _ in 0..500 {
            let u: vec::Vec<f64> = (0..4).map(|_| rng.gen_range(0.0..20.0)).collect();
            let nu = b.matrix().mul_vec(&u);
            assert!(contains(&b, &bounds, &nu, 1e-6));
        }
    }

    #[test]
    fn symmetric_box_gives_centrally_symmetric_set() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let b = ghgv2();
        let bounds = EffectiveBounds {
            lo: vec![-10.0; 4],
            hi: vec![10.0; 4],
        };
        for _ in 0..200 {
            let nu: vec::Vec<f64> = (0..3).map(|_| rng.gen_range(-4000.0..4000.0)).collect();
            let neg: vec::Vec<f64> = nu.iter().map(|x| -x).collect();
            assert_eq!(
                contains(&b, &bounds, &nu, 1e-6),
                contains(&b, &bounds, &neg, 1e-6)
            );
        }
    }

    #[test]
    fn hull_contains_every_vertex_image() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(13);
        for _ in 0..50 {
            let data: vec::Vec<f64> = (0..12).map(|_| rng.gen_range(-100.0..100.0)).collect();
            let b = EffectivenessMatrix::from_row_slice(3, 4, &data).unwrap();
            let bounds = EffectiveBounds {
                lo: vec![-5.0; 4],
                hi: vec![7.0; 4],
            };
            let set = moment_set(&b, &bounds).unwrap();
            let scale: f64 = set
                .vertices
                .iter()
                .flat_map(|v| v.iter())
                .fold(0.0f64, |acc, &x| acc.max(libm::fabs(x)));
            assert!(hull_max_violation(&set) <= 1e-9 * scale.max(1.0));
        }
    }
}
