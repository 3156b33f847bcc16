//! Seeded synthetic motion families for desk-scale experiments.
//!
//! Each class is a distinct family of sinusoidal bone rotations driven through
//! forward kinematics over a spanning tree of the topology, so bone lengths
//! stay (near-)constant within a motion the way captured skeletons do. Classes
//! differ in base pose, oscillation frequency, amplitudes and phases; samples
//! within a class differ by a phase jitter, an amplitude scale and small
//! coordinate noise.

use std::f64::consts::TAU;
use std::sync::Arc;

use ndarray::Array3;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::motion::{normalize_dataset, MotionDataset, NormalizationTransform, SkeletonMotion, SkeletonTopology, Split};

/// Parameters of the synthetic generator.
#[derive(Debug, Clone)]
pub struct SyntheticSpec {
    pub seed: u64,
    pub class_count: usize,
    pub samples_per_class: usize,
    pub frame_count: usize,
    pub topology: Arc<SkeletonTopology>,
}

/// Raw bone length before normalization; arbitrary units.
const BONE_LEN: f64 = 1.0;
/// Standard deviation of the per-coordinate capture noise (raw units).
const NOISE_SIGMA: f64 = 0.005;

struct ClassParams {
    frequency: f64,
    root_dir: [f64; 3],
    root_amp: f64,
    root_phase: f64,
    // Per spanning-tree edge: rest azimuth/elevation, amplitudes, phases.
    edges: Vec<EdgeParams>,
}

struct EdgeParams {
    azimuth0: f64,
    elevation0: f64,
    azimuth_amp: f64,
    elevation_amp: f64,
    azimuth_phase: f64,
    elevation_phase: f64,
}

/// Spanning forest of the bone graph: `(parent_joint, child_joint)` in BFS
/// order, plus the root joint of every connected component.
fn spanning_tree(topology: &SkeletonTopology) -> (Vec<usize>, Vec<(usize, usize)>) {
    let j = topology.joint_count();
    let mut adjacency = vec![Vec::new(); j];
    for &(s, t) in topology.bones() {
        adjacency[s].push(t);
        adjacency[t].push(s);
    }
    for neighbors in &mut adjacency {
        neighbors.sort_unstable();
    }
    let mut visited = vec![false; j];
    let mut roots = Vec::new();
    let mut edges = Vec::new();
    for start in 0..j {
        if visited[start] {
            continue;
        }
        visited[start] = true;
        roots.push(start);
        let mut queue = std::collections::VecDeque::from([start]);
        while let Some(u) = queue.pop_front() {
            for &v in &adjacency[u] {
                if !visited[v] {
                    visited[v] = true;
                    edges.push((u, v));
                    queue.push_back(v);
                }
            }
        }
    }
    (roots, edges)
}

fn unit_vector(rng: &mut ChaCha12Rng) -> [f64; 3] {
    loop {
        let v: [f64; 3] = [
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        ];
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if n > 1e-3 {
            return [v[0] / n, v[1] / n, v[2] / n];
        }
    }
}

/// Deterministic dataset of `class_count * samples_per_class` motions,
/// normalized to `[0,1]` with the transform stored on the dataset. Every
/// fifth sample of each class is tagged as test.
pub fn generate_synthetic_dataset(spec: &SyntheticSpec) -> Result<MotionDataset> {
    if spec.class_count < 2 {
        return Err(Error::InvalidConfig("synthetic dataset needs at least 2 classes".into()));
    }
    if spec.samples_per_class == 0 {
        return Err(Error::InvalidConfig("samples_per_class must be positive".into()));
    }
    if spec.frame_count == 0 {
        return Err(Error::InvalidConfig("frame_count must be positive".into()));
    }

    let topo = &spec.topology;
    let (roots, edges) = spanning_tree(topo);
    let mut rng = ChaCha12Rng::seed_from_u64(spec.seed);
    let noise = Normal::new(0.0, NOISE_SIGMA).expect("valid sigma");

    let classes: Vec<ClassParams> = (0..spec.class_count)
        .map(|c| ClassParams {
            frequency: (c + 1) as f64,
            root_dir: unit_vector(&mut rng),
            root_amp: rng.random_range(0.04..0.12),
            root_phase: rng.random_range(0.0..TAU),
            edges: (0..edges.len())
                .map(|_| EdgeParams {
                    azimuth0: rng.random_range(0.0..TAU),
                    elevation0: rng.random_range(-0.9..0.9),
                    azimuth_amp: rng.random_range(0.25..0.6),
                    elevation_amp: rng.random_range(0.25..0.6),
                    azimuth_phase: rng.random_range(0.0..TAU),
                    elevation_phase: rng.random_range(0.0..TAU),
                })
                .collect(),
        })
        .collect();

    let t_count = spec.frame_count;
    let j_count = topo.joint_count();
    let mut motions = Vec::with_capacity(spec.class_count * spec.samples_per_class);
    let mut splits = Vec::with_capacity(motions.capacity());

    for (c, params) in classes.iter().enumerate() {
        for s in 0..spec.samples_per_class {
            let amp_scale = rng.random_range(0.9..1.1);
            let phase_jitter = rng.random_range(0.0..0.25 * TAU);
            let mut pos = Array3::zeros((t_count, j_count, 3));
            for t in 0..t_count {
                let phase_t = TAU * params.frequency * t as f64 / t_count as f64 + phase_jitter;
                // Component roots oscillate gently around spaced base points.
                for (k, &root) in roots.iter().enumerate() {
                    let wave = amp_scale * params.root_amp * (phase_t + params.root_phase).sin();
                    pos[[t, root, 0]] = wave * params.root_dir[0];
                    pos[[t, root, 1]] = k as f64 * 2.5 + wave * params.root_dir[1];
                    pos[[t, root, 2]] = wave * params.root_dir[2];
                }
                for (e, &(parent, child)) in edges.iter().enumerate() {
                    let ep = &params.edges[e];
                    let azimuth =
                        ep.azimuth0 + amp_scale * ep.azimuth_amp * (phase_t + ep.azimuth_phase).sin();
                    let elevation = ep.elevation0
                        + amp_scale * ep.elevation_amp * (phase_t + ep.elevation_phase).sin();
                    let dir = [
                        elevation.cos() * azimuth.cos(),
                        elevation.cos() * azimuth.sin(),
                        elevation.sin(),
                    ];
                    for a in 0..3 {
                        pos[[t, child, a]] = pos[[t, parent, a]] + BONE_LEN * dir[a];
                    }
                }
            }
            for v in pos.iter_mut() {
                *v += noise.sample(&mut rng);
            }
            let name = format!("class{c}_sample{s:03}");
            motions.push(SkeletonMotion::new(topo.clone(), pos, Some(c), Some(name))?);
            splits.push(if s % 5 == 4 { Split::Test } else { Split::Train });
        }
    }

    let raw = MotionDataset::new(motions, splits, spec.class_count, NormalizationTransform::identity())?;
    let (normalized, _) = normalize_dataset(&raw)?;
    Ok(normalized)
}
