use super::{Geometry, LabelVolume};

/// A 6-connected foreground component.
#[derive(Debug, Clone, PartialEq)]
pub struct Component {
    /// Member voxel indices, ascending.
    pub voxels: Vec<usize>,
    /// Mean normalized position of the members.
    pub centroid: [f64; 3],
}

impl Component {
    pub fn size(&self) -> usize {
        self.voxels.len()
    }
}

/// Components of the nonzero voxels of `mask`.
pub fn connected_components(mask: &LabelVolume) -> Vec<Component> {
    let labels = mask.labels();
    components_of(mask.geometry(), |i| labels[i] != 0)
}

/// 6-connected components of the voxels where `is_foreground` holds.
///
/// Components are numbered in ascending order of their smallest voxel index.
pub fn components_of(geometry: &Geometry, is_foreground: impl Fn(usize) -> bool) -> Vec<Component> {
    let [nx, ny, nz] = geometry.dims;
    let n = geometry.len();
    let mut visited = vec![false; n];
    let mut stack = Vec::new();
    let mut out = Vec::new();

    for seed in 0..n {
        if visited[seed] || !is_foreground(seed) {
            continue;
        }
        visited[seed] = true;
        stack.push(seed);
        let mut voxels = Vec::new();
        while let Some(i) = stack.pop() {
            voxels.push(i);
            let [x, y, z] = geometry.coords(i);
            let mut visit = |j: usize| {
                if !visited[j] && is_foreground(j) {
                    visited[j] = true;
                    stack.push(j);
                }
            };
            if x > 0 {
                visit(i - 1);
            }
            if x + 1 < nx {
                visit(i + 1);
            }
            if y > 0 {
                visit(i - nx);
            }
            if y + 1 < ny {
                visit(i + nx);
            }
            if z > 0 {
                visit(i - nx * ny);
            }
            if z + 1 < nz {
                visit(i + nx * ny);
            }
        }
        voxels.sort_unstable();

        let mut sum = [0.0f64; 3];
        for &i in &voxels {
            let u = geometry.normalized_coords(i);
            for k in 0..3 {
                sum[k] += u[k];
            }
        }
        let count = voxels.len() as f64;
        out.push(Component {
            centroid: sum.map(|s| s / count),
            voxels,
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn mask(dims: [usize; 3], on: &[[usize; 3]]) -> LabelVolume {
        let g = Geometry::new(dims, [1.0; 3]).unwrap();
        let mut m = LabelVolume::filled(g, 0);
        for &[x, y, z] in on {
            let i = g.index(x, y, z);
            m.labels_mut()[i] = 1;
        }
        m
    }

    #[test]
    fn single_voxel() {
        let c = connected_components(&mask([3, 3, 3], &[[1, 2, 0]]));
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].size(), 1);
        assert_eq!(c[0].centroid, [0.5, 1.0, 0.0]);
    }

    #[test]
    fn edge_diagonal_is_not_connected() {
        let c = connected_components(&mask([2, 2, 1], &[[0, 0, 0], [1, 1, 0]]));
        assert_eq!(c.len(), 2);
        assert_eq!(c[0].voxels, vec![0]);
        assert_eq!(c[1].voxels, vec![3]);
        // singleton z axis
        assert_eq!(c[1].centroid, [1.0, 1.0, 0.5]);
    }

    #[test]
    fn solid_cube() {
        let g = Geometry::isotropic(3);
        let c = connected_components(&LabelVolume::filled(g, 1));
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].size(), 27);
        for k in 0..3 {
            assert!((c[0].centroid[k] - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn empty_mask() {
        assert!(connected_components(&LabelVolume::filled(Geometry::isotropic(4), 0)).is_empty());
    }

    proptest! {
        #[test]
        fn components_partition_foreground(
            dims in prop::array::uniform3(1usize..7),
            bits in prop::collection::vec(any::<bool>(), 216),
        ) {
            let g = Geometry::new(dims, [1.0; 3]).unwrap();
            let labels: Vec<u8> = (0..g.len()).map(|i| bits[i] as u8).collect();
            let m = LabelVolume::new(g, labels).unwrap();
            let comps = connected_components(&m);

            let total: usize = comps.iter().map(Component::size).sum();
            prop_assert_eq!(total, m.count(1));

            let mut owner = vec![usize::MAX; g.len()];
            for (id, c) in comps.iter().enumerate() {
                for &v in &c.voxels {
                    prop_assert_eq!(owner[v], usize::MAX);
                    owner[v] = id;
                }
            }
            // no two components touch across a face
            for i in 0..g.len() {
                if owner[i] == usize::MAX { continue; }
                let [x, y, z] = g.coords(i);
                for (dx, dy, dz) in [(1, 0, 0), (0, 1, 0), (0, 0, 1)] {
                    let (a, b, c) = (x + dx, y + dy, z + dz);
                    if a < dims[0] && b < dims[1] && c < dims[2] {
                        let j = g.index(a, b, c);
                        if owner[j] != usize::MAX {
                            prop_assert_eq!(owner[i], owner[j]);
                        }
                    }
                }
            }
            // ids ascend with the minimum member index
            let mins: Vec<usize> = comps.iter().map(|c| c.voxels[0]).collect();
            prop_assert!(mins.windows(2).all(|w| w[0] < w[1]));
            prop_assert_eq!(connected_components(&m), comps);
        }
    }
}
