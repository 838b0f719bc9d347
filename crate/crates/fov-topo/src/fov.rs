//! Field-of-view geometry: exact circular sectors, their approximation as an
//! intersection of one inclusion disk with three exclusion-disk complements
//! centered on rigidly attached virtual points, a grid-based quality metric
//! with a local-search fitter, and sensing-graph construction.

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{DirectedGraph, GraphError};

/// Two agents closer than this are considered coincident; bearings to a
/// coincident point are undefined.
pub const COINCIDENCE_EPS: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum FovError {
    #[error("sector heading must lie in (-pi, pi], got {0}")]
    BadHeading(f64),
    #[error("central angle must lie in (0, pi), got {0}")]
    BadCentralAngle(f64),
    #[error("sector range must be positive and finite, got {0}")]
    BadRange(f64),
    #[error("disk radius must be positive and finite, got {0}")]
    BadRadius(f64),
    #[error("exclusion-disk center must be at positive distance from the robot origin")]
    OffsetAtOrigin,
    #[error("inclusion radius {rho1} exceeds sector range {range}")]
    InclusionExceedsRange { rho1: f64, range: f64 },
    #[error("a robot needs at least one sector")]
    NoSectors,
    #[error("sector headings must be distinct")]
    DuplicateSectorHeading,
    #[error("communication radius must be positive and finite, got {0}")]
    BadCommRadius(f64),
    #[error("collision radius must be non-negative and finite, got {0}")]
    BadCollisionRadius(f64),
    #[error("grid resolution must be positive and finite, got {0}")]
    BadResolution(f64),
    #[error("grid covers only {cells} cells at resolution {resolution}; at least 100 required")]
    DegenerateGrid { cells: usize, resolution: f64 },
    #[error("search budget must be at least 1")]
    BadBudget,
    #[error("agents {0} and {1} are coincident (distance < {COINCIDENCE_EPS} m)")]
    CoincidentAgents(usize, usize),
    #[error("states and specs must have the same length ({states} vs {specs})")]
    LengthMismatch { states: usize, specs: usize },
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// A robot position together with its heading.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgentPose {
    pub position: Vector2<f64>,
    pub heading: f64,
}

impl AgentPose {
    pub fn new(x: f64, y: f64, heading: f64) -> Self {
        Self {
            position: Vector2::new(x, y),
            heading,
        }
    }
}

/// The three virtual points shaping one sector approximation. `Rear` removes
/// the backward region, `Left`/`Right` trim the lateral ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Tau {
    Left,
    Rear,
    Right,
}

impl Tau {
    pub const ALL: [Tau; 3] = [Tau::Left, Tau::Rear, Tau::Right];

    pub fn index(self) -> usize {
        match self {
            Tau::Left => 0,
            Tau::Rear => 1,
            Tau::Right => 2,
        }
    }
}

/// An exact circular sector: heading of the boresight in the robot body
/// frame, central angle, sensing range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FovSector {
    pub heading: f64,
    pub central_angle: f64,
    pub range: f64,
}

impl FovSector {
    pub fn new(heading: f64, central_angle: f64, range: f64) -> Result<Self, FovError> {
        if !heading.is_finite() || heading <= -std::f64::consts::PI || heading > std::f64::consts::PI
        {
            return Err(FovError::BadHeading(heading));
        }
        if !central_angle.is_finite() || central_angle <= 0.0 || central_angle >= std::f64::consts::PI
        {
            return Err(FovError::BadCentralAngle(central_angle));
        }
        if !range.is_finite() || range <= 0.0 {
            return Err(FovError::BadRange(range));
        }
        Ok(Self {
            heading,
            central_angle,
            range,
        })
    }

    /// Closed containment test: within range and within half the central
    /// angle of the boresight. The apex itself counts as contained.
    pub fn contains(&self, robot: Vector2<f64>, robot_heading: f64, query: Vector2<f64>) -> bool {
        let d = query - robot;
        let r2 = d.norm_squared();
        if r2 > self.range * self.range {
            return false;
        }
        let r = r2.sqrt();
        if r == 0.0 {
            return true;
        }
        let boresight = robot_heading + self.heading;
        let dot = d.x * boresight.cos() + d.y * boresight.sin();
        let cos_half = (self.central_angle / 2.0).cos();
        dot >= cos_half * r
    }
}

/// A rigid offset in the robot body frame, stored as the (rotation angle,
/// translation vector) pair that generates it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VirtualOffset {
    pub rotation: f64,
    pub translation: Vector2<f64>,
}

impl VirtualOffset {
    pub fn new(rotation: f64, translation: Vector2<f64>) -> Self {
        Self {
            rotation,
            translation,
        }
    }

    /// The offset vector in the body frame: `R(rotation) * translation`.
    pub fn body_offset(&self) -> Vector2<f64> {
        rotate(self.translation, self.rotation)
    }
}

impl Serialize for VirtualOffset {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        (self.rotation, self.translation.x, self.translation.y).serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for VirtualOffset {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let (rotation, tx, ty) = <(f64, f64, f64)>::deserialize(deserializer)?;
        Ok(Self::new(rotation, Vector2::new(tx, ty)))
    }
}

/// Disk-based approximation of a sector: one inclusion disk of radius `rho1`
/// around the robot and one exclusion disk of radius `rho2` around each of
/// the three virtual points. `rho2_per_point`, when set, overrides the shared
/// exclusion radius per point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FovApproximation {
    pub rho1: f64,
    pub rho2: f64,
    pub offsets: [VirtualOffset; 3],
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho2_per_point: Option<[f64; 3]>,
}

impl FovApproximation {
    pub fn new(
        rho1: f64,
        rho2: f64,
        offsets: [VirtualOffset; 3],
        rho2_per_point: Option<[f64; 3]>,
    ) -> Result<Self, FovError> {
        if !rho1.is_finite() || rho1 <= 0.0 {
            return Err(FovError::BadRadius(rho1));
        }
        if !rho2.is_finite() || rho2 <= 0.0 {
            return Err(FovError::BadRadius(rho2));
        }
        if let Some(per) = rho2_per_point {
            for r in per {
                if !r.is_finite() || r <= 0.0 {
                    return Err(FovError::BadRadius(r));
                }
            }
        }
        for off in &offsets {
            if off.body_offset().norm() == 0.0 {
                return Err(FovError::OffsetAtOrigin);
            }
        }
        Ok(Self {
            rho1,
            rho2,
            offsets,
            rho2_per_point,
        })
    }

    /// Default placement for a sector: `rho1 = rho2 = range`, the rear point
    /// directly behind the boresight at distance `rho2`, and the lateral
    /// points at distance `rho2` along `±(pi/2 + central_angle/2)` from the
    /// boresight. Each exclusion disk then passes through the apex, the
    /// lateral ones tangent to a bounding ray of the sector.
    pub fn default_for(sector: &FovSector) -> Self {
        let rho = sector.range;
        let psi = std::f64::consts::FRAC_PI_2 + sector.central_angle / 2.0;
        let offsets = [
            VirtualOffset::new(sector.heading, rho * Vector2::new(psi.cos(), psi.sin())),
            VirtualOffset::new(sector.heading, Vector2::new(-rho, 0.0)),
            VirtualOffset::new(sector.heading, rho * Vector2::new((-psi).cos(), (-psi).sin())),
        ];
        Self {
            rho1: rho,
            rho2: rho,
            offsets,
            rho2_per_point: None,
        }
    }

    /// Effective exclusion radius for one virtual point.
    pub fn rho2_for(&self, tau: Tau) -> f64 {
        match self.rho2_per_point {
            Some(per) => per[tau.index()],
            None => self.rho2,
        }
    }

    /// World positions of the three virtual points for a robot at `x` with
    /// the given heading. Points are recomputed from the pose, never
    /// integrated, so rigid attachment holds by construction.
    pub fn place_virtual_points(&self, x: Vector2<f64>, heading: f64) -> [Vector2<f64>; 3] {
        let place = |off: &VirtualOffset| x + rotate(off.body_offset(), heading);
        [
            place(&self.offsets[0]),
            place(&self.offsets[1]),
            place(&self.offsets[2]),
        ]
    }

    /// The four disk conditions: inside the inclusion disk (closed) and
    /// outside every exclusion disk (closed).
    pub fn contains(&self, robot: Vector2<f64>, heading: f64, query: Vector2<f64>) -> bool {
        let d = query - robot;
        if d.norm_squared() > self.rho1 * self.rho1 {
            return false;
        }
        let points = self.place_virtual_points(robot, heading);
        for tau in Tau::ALL {
            let r2 = self.rho2_for(tau);
            if (query - points[tau.index()]).norm_squared() < r2 * r2 {
                return false;
            }
        }
        true
    }
}

/// Per-robot sensing description: one or more (sector, approximation) pairs
/// plus the communication and collision radii. The communication radius is
/// carried for completeness; no protocol is layered on it.
#[derive(Debug, Clone, PartialEq)]
pub struct RobotSpec {
    sectors: Vec<(FovSector, FovApproximation)>,
    pub comm_radius: f64,
    pub collision_radius: f64,
}

impl RobotSpec {
    pub fn new(
        sectors: Vec<(FovSector, FovApproximation)>,
        comm_radius: f64,
        collision_radius: f64,
    ) -> Result<Self, FovError> {
        if sectors.is_empty() {
            return Err(FovError::NoSectors);
        }
        for (i, (s, a)) in sectors.iter().enumerate() {
            if a.rho1 > s.range {
                return Err(FovError::InclusionExceedsRange {
                    rho1: a.rho1,
                    range: s.range,
                });
            }
            if sectors[..i].iter().any(|(s2, _)| s2.heading == s.heading) {
                return Err(FovError::DuplicateSectorHeading);
            }
        }
        if !comm_radius.is_finite() || comm_radius <= 0.0 {
            return Err(FovError::BadCommRadius(comm_radius));
        }
        if !collision_radius.is_finite() || collision_radius < 0.0 {
            return Err(FovError::BadCollisionRadius(collision_radius));
        }
        Ok(Self {
            sectors,
            comm_radius,
            collision_radius,
        })
    }

    pub fn sectors(&self) -> &[(FovSector, FovApproximation)] {
        &self.sectors
    }

    /// Chooses the sector whose approximation contains `target`, minimizing
    /// the absolute bearing deviation of the target from the sector
    /// boresight; ties break to the lowest sector index. `None` when no
    /// approximated sector contains the target.
    pub fn select_sector(&self, pose: &AgentPose, target: Vector2<f64>) -> Option<usize> {
        let d = target - pose.position;
        let bearing = d.y.atan2(d.x);
        let mut best: Option<(usize, f64)> = None;
        for (k, (sector, approx)) in self.sectors.iter().enumerate() {
            if !approx.contains(pose.position, pose.heading, target) {
                continue;
            }
            let deviation = wrap_angle(bearing - (pose.heading + sector.heading)).abs();
            match best {
                Some((_, best_dev)) if deviation >= best_dev => {}
                _ => best = Some((k, deviation)),
            }
        }
        best.map(|(k, _)| k)
    }
}

/// Builds the sensing graph: edge `(i, j)` iff some approximated sector of
/// robot `i` contains robot `j`, with the per-edge selected sector index.
/// Simple by construction; errors on coincident agents.
pub fn sensing_graph(
    states: &[AgentPose],
    specs: &[RobotSpec],
) -> Result<(DirectedGraph, Vec<usize>), FovError> {
    if states.len() != specs.len() {
        return Err(FovError::LengthMismatch {
            states: states.len(),
            specs: specs.len(),
        });
    }
    let n = states.len();
    let mut edges = Vec::new();
    let mut assignment = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            if (states[j].position - states[i].position).norm() < COINCIDENCE_EPS {
                return Err(FovError::CoincidentAgents(i, j));
            }
            if let Some(k) = specs[i].select_sector(&states[i], states[j].position) {
                edges.push((i, j));
                assignment.push(k);
            }
        }
    }
    Ok((DirectedGraph::new(n, edges)?, assignment))
}

/// Grid-counting quality of an approximation against the exact sector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ApproximationQuality {
    /// Intersection over union of the two regions.
    pub iou: f64,
    /// Area covered by the approximation but not the sector, m².
    pub false_positive_area: f64,
    /// Area covered by the sector but not the approximation, m².
    pub false_negative_area: f64,
    pub grid_resolution: f64,
}

/// Deterministic cell-center grid over the square that bounds both the
/// inclusion disk and the sector, with the apex at the origin.
struct QualityGrid {
    centers: Vec<f64>,
    sector_mask: Vec<bool>,
}

impl QualityGrid {
    fn new(sector: &FovSector, half_side: f64, resolution: f64) -> Result<Self, FovError> {
        if !resolution.is_finite() || resolution <= 0.0 {
            return Err(FovError::BadResolution(resolution));
        }
        let per_axis = (2.0 * half_side / resolution).ceil() as usize;
        let cells = per_axis * per_axis;
        if cells < 100 {
            return Err(FovError::DegenerateGrid { cells, resolution });
        }
        let centers: Vec<f64> = (0..per_axis)
            .map(|i| -half_side + (i as f64 + 0.5) * resolution)
            .collect();
        let origin = Vector2::zeros();
        let mut sector_mask = vec![false; cells];
        for (ix, &cx) in centers.iter().enumerate() {
            for (iy, &cy) in centers.iter().enumerate() {
                sector_mask[ix * per_axis + iy] =
                    sector.contains(origin, 0.0, Vector2::new(cx, cy));
            }
        }
        Ok(Self {
            centers,
            sector_mask,
        })
    }

    fn evaluate(&self, approx: &FovApproximation, resolution: f64) -> ApproximationQuality {
        let per_axis = self.centers.len();
        let origin = Vector2::zeros();
        let (mut inter, mut union, mut fp, mut fn_) = (0usize, 0usize, 0usize, 0usize);
        for (ix, &cx) in self.centers.iter().enumerate() {
            for (iy, &cy) in self.centers.iter().enumerate() {
                let in_sector = self.sector_mask[ix * per_axis + iy];
                let in_approx = approx.contains(origin, 0.0, Vector2::new(cx, cy));
                match (in_sector, in_approx) {
                    (true, true) => {
                        inter += 1;
                        union += 1;
                    }
                    (true, false) => {
                        fn_ += 1;
                        union += 1;
                    }
                    (false, true) => {
                        fp += 1;
                        union += 1;
                    }
                    (false, false) => {}
                }
            }
        }
        let cell_area = resolution * resolution;
        ApproximationQuality {
            iou: inter as f64 / union as f64,
            false_positive_area: fp as f64 * cell_area,
            false_negative_area: fn_ as f64 * cell_area,
            grid_resolution: resolution,
        }
    }
}

/// Estimates IoU and false-positive/negative areas by counting cell centers.
/// Deterministic for a fixed resolution.
pub fn approximation_quality(
    sector: &FovSector,
    approx: &FovApproximation,
    resolution: f64,
) -> Result<ApproximationQuality, FovError> {
    let half_side = approx.rho1.max(sector.range);
    let grid = QualityGrid::new(sector, half_side, resolution)?;
    Ok(grid.evaluate(approx, resolution))
}

/// Candidate parameterization used by the fitter: all three exclusion disks
/// keep passing through the apex (center distance equals `rho2`), the rear
/// point stays directly behind, the lateral directions are free.
#[derive(Clone, Copy)]
struct FitParams {
    rho1: f64,
    rho2: f64,
    psi_left: f64,
    psi_right: f64,
}

impl FitParams {
    fn build(&self, sector: &FovSector) -> FovApproximation {
        let offsets = [
            VirtualOffset::new(
                sector.heading,
                self.rho2 * Vector2::new(self.psi_left.cos(), self.psi_left.sin()),
            ),
            VirtualOffset::new(sector.heading, Vector2::new(-self.rho2, 0.0)),
            VirtualOffset::new(
                sector.heading,
                self.rho2 * Vector2::new(self.psi_right.cos(), self.psi_right.sin()),
            ),
        ];
        FovApproximation {
            rho1: self.rho1,
            rho2: self.rho2,
            offsets,
            rho2_per_point: None,
        }
    }

    fn coord(&self, c: usize) -> f64 {
        [self.rho1, self.rho2, self.psi_left, self.psi_right][c]
    }

    fn with_coord(mut self, c: usize, v: f64) -> Self {
        match c {
            0 => self.rho1 = v,
            1 => self.rho2 = v,
            2 => self.psi_left = v,
            _ => self.psi_right = v,
        }
        self
    }
}

/// Refines the default placement by deterministic coordinate descent over
/// `(rho1, rho2, psi_left, psi_right)`, maximizing grid IoU. `budget` counts
/// IoU evaluations including the seed, so a budget of 1 returns the default
/// placement unchanged. The result never scores below the default on the
/// same grid.
pub fn fit_approximation(
    sector: &FovSector,
    resolution: f64,
    budget: usize,
) -> Result<FovApproximation, FovError> {
    if budget < 1 {
        return Err(FovError::BadBudget);
    }
    let grid = QualityGrid::new(sector, sector.range, resolution)?;
    let rho = sector.range;
    let psi0 = std::f64::consts::FRAC_PI_2 + sector.central_angle / 2.0;
    let mut best = FitParams {
        rho1: rho,
        rho2: rho,
        psi_left: psi0,
        psi_right: -psi0,
    };
    let mut best_iou = grid.evaluate(&best.build(sector), resolution).iou;
    let mut evals = 1usize;

    let lo = [resolution, resolution, std::f64::consts::FRAC_PI_2, -std::f64::consts::PI];
    let hi = [rho, 4.0 * rho, std::f64::consts::PI, -std::f64::consts::FRAC_PI_2];
    let mut steps = [0.1 * rho, 0.1 * rho, 0.1, 0.1];
    let min_steps = [1e-3 * rho, 1e-3 * rho, 1e-3, 1e-3];

    'outer: loop {
        let mut improved_any = false;
        for c in 0..4 {
            for dir in [1.0, -1.0] {
                loop {
                    if evals >= budget {
                        break 'outer;
                    }
                    let v = (best.coord(c) + dir * steps[c]).clamp(lo[c], hi[c]);
                    if v == best.coord(c) {
                        break;
                    }
                    let trial = best.with_coord(c, v);
                    let iou = grid.evaluate(&trial.build(sector), resolution).iou;
                    evals += 1;
                    if iou > best_iou {
                        best = trial;
                        best_iou = iou;
                        improved_any = true;
                    } else {
                        break;
                    }
                }
            }
        }
        if !improved_any {
            if steps
                .iter()
                .zip(min_steps.iter())
                .all(|(s, m)| s <= m)
            {
                break;
            }
            for s in &mut steps {
                *s /= 2.0;
            }
        }
    }
    Ok(best.build(sector))
}

pub(crate) fn rotate(v: Vector2<f64>, angle: f64) -> Vector2<f64> {
    let (s, c) = angle.sin_cos();
    Vector2::new(c * v.x - s * v.y, s * v.x + c * v.y)
}

/// Wraps an angle into (-pi, pi].
pub(crate) fn wrap_angle(a: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut w = a % two_pi;
    if w <= -std::f64::consts::PI {
        w += two_pi;
    } else if w > std::f64::consts::PI {
        w -= two_pi;
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn sector90() -> FovSector {
        FovSector::new(0.0, FRAC_PI_2, 10.0).unwrap()
    }

    fn v(x: f64, y: f64) -> Vector2<f64> {
        Vector2::new(x, y)
    }

    #[test]
    fn sector_validation() {
        assert!(FovSector::new(0.0, PI, 1.0).is_err());
        assert!(FovSector::new(0.0, 0.0, 1.0).is_err());
        assert!(FovSector::new(4.0, 1.0, 1.0).is_err());
        assert!(FovSector::new(0.0, 1.0, 0.0).is_err());
        assert!(FovSector::new(PI, 1.0, 1.0).is_ok());
    }

    #[test]
    fn sector_containment() {
        let s = sector90();
        // boresight point at half range
        assert!(s.contains(v(0.0, 0.0), 0.0, v(5.0, 0.0)));
        // directly behind
        assert!(!s.contains(v(0.0, 0.0), 0.0, v(-1.0, 0.0)));
        // boundary of the range on the boresight: closed
        assert!(s.contains(v(0.0, 0.0), 0.0, v(10.0, 0.0)));
        // apex contained
        assert!(s.contains(v(0.0, 0.0), 0.0, v(0.0, 0.0)));
        // just outside the half-angle
        assert!(!s.contains(v(0.0, 0.0), 0.0, v(1.0, 1.01)));
        assert!(s.contains(v(0.0, 0.0), 0.0, v(1.0, 0.99)));
    }

    #[test]
    fn virtual_point_placement() {
        let approx = FovApproximation::new(
            1.0,
            1.0,
            [
                VirtualOffset::new(0.0, v(0.0, 1.0)),
                VirtualOffset::new(0.0, v(-1.0, 0.0)),
                VirtualOffset::new(0.0, v(0.0, -1.0)),
            ],
            None,
        )
        .unwrap();

        let pts = approx.place_virtual_points(v(0.0, 0.0), 0.0);
        assert!((pts[Tau::Rear.index()] - v(-1.0, 0.0)).norm() < 1e-15);

        // quarter turn rotates the rear offset onto (0, -1)
        let pts = approx.place_virtual_points(v(0.0, 0.0), FRAC_PI_2);
        assert!((pts[Tau::Rear.index()] - v(0.0, -1.0)).norm() < 1e-12);

        // pure translation shifts every point exactly
        let a = approx.place_virtual_points(v(0.0, 0.0), 0.0);
        let b = approx.place_virtual_points(v(3.0, 4.0), 0.0);
        for (pa, pb) in a.iter().zip(b.iter()) {
            assert_eq!(pb - pa, v(3.0, 4.0));
        }
    }

    #[test]
    fn default_placement_geometry() {
        let s = sector90();
        let a = FovApproximation::default_for(&s);
        assert_eq!(a.rho1, 10.0);
        assert_eq!(a.rho2, 10.0);
        let psi = FRAC_PI_2 + s.central_angle / 2.0; // 135 degrees
        let left = a.offsets[Tau::Left.index()].body_offset();
        assert!((left - v(10.0 * psi.cos(), 10.0 * psi.sin())).norm() < 1e-12);
        let rear = a.offsets[Tau::Rear.index()].body_offset();
        assert!((rear - v(-10.0, 0.0)).norm() < 1e-15);
        let right = a.offsets[Tau::Right.index()].body_offset();
        assert!((right - v(10.0 * psi.cos(), -10.0 * psi.sin())).norm() < 1e-12);

        // small central angle pushes the lateral points toward +/- 90 degrees
        let narrow = FovSector::new(0.0, 1e-3, 10.0).unwrap();
        let an = FovApproximation::default_for(&narrow);
        let left = an.offsets[Tau::Left.index()].body_offset();
        let angle = left.y.atan2(left.x);
        assert!((angle - FRAC_PI_2).abs() < 1e-3);

        // construction satisfies the type invariants
        assert!(FovApproximation::new(a.rho1, a.rho2, a.offsets, None).is_ok());
    }

    #[test]
    fn approx_containment_conditions() {
        let s = sector90();
        let a = FovApproximation::default_for(&s);
        let robot = v(0.0, 0.0);

        // half-rho1 ahead on the boresight satisfies all four inequalities
        assert!(a.contains(robot, 0.0, v(5.0, 0.0)));
        // inside the rear exclusion disk
        assert!(!a.contains(robot, 0.0, v(-9.0, 0.0)));
        // outside the inclusion disk
        assert!(!a.contains(robot, 0.0, v(10.5, 0.0)));
        // apex lies on every exclusion boundary (distance exactly rho2): contained
        assert!(a.contains(robot, 0.0, v(0.0, 0.0)));
    }

    #[test]
    fn per_point_radius_override() {
        let s = sector90();
        let mut a = FovApproximation::default_for(&s);
        let probe = v(0.5, 3.0);
        assert!(a.contains(v(0.0, 0.0), 0.0, probe));
        // grow only the left exclusion disk until it swallows the probe
        a.rho2_per_point = Some([13.0, 10.0, 10.0]);
        assert!(!a.contains(v(0.0, 0.0), 0.0, probe));
    }

    #[test]
    fn select_sector_prefers_small_boresight_deviation() {
        let left = FovSector::new(0.4, FRAC_PI_2, 10.0).unwrap();
        let right = FovSector::new(-0.4, FRAC_PI_2, 10.0).unwrap();
        let spec = RobotSpec::new(
            vec![
                (left, FovApproximation::default_for(&left)),
                (right, FovApproximation::default_for(&right)),
            ],
            5.0,
            0.1,
        )
        .unwrap();
        let pose = AgentPose::new(0.0, 0.0, 0.0);
        // target above the axis: closer to the +0.4 boresight
        assert_eq!(spec.select_sector(&pose, v(3.0, 1.0)), Some(0));
        assert_eq!(spec.select_sector(&pose, v(3.0, -1.0)), Some(1));
        // exact bisector: equal deviation, tie breaks to the lower index
        assert_eq!(spec.select_sector(&pose, v(3.0, 0.0)), Some(0));
        // far outside both sectors
        assert_eq!(spec.select_sector(&pose, v(-3.0, 0.0)), None);
    }

    #[test]
    fn sensing_graph_mutual_and_excluded() {
        let s = FovSector::new(0.0, FRAC_PI_2, 5.0).unwrap();
        let spec = || {
            RobotSpec::new(vec![(s, FovApproximation::default_for(&s))], 5.0, 0.1).unwrap()
        };
        // facing each other inside range: two-cycle
        let states = [AgentPose::new(0.0, 0.0, 0.0), AgentPose::new(3.0, 0.0, PI)];
        let (g, assign) = sensing_graph(&states, &[spec(), spec()]).unwrap();
        assert_eq!(g.edges(), &[(0, 1), (1, 0)]);
        assert_eq!(assign, vec![0, 0]);

        // agent 1 behind agent 0: only (1, 0) remains
        let states = [AgentPose::new(0.0, 0.0, 0.0), AgentPose::new(-3.0, 0.0, 0.0)];
        let (g, _) = sensing_graph(&states, &[spec(), spec()]).unwrap();
        assert_eq!(g.edges(), &[(1, 0)]);

        // coincident agents are rejected
        let states = [AgentPose::new(0.0, 0.0, 0.0), AgentPose::new(0.0, 0.0, 1.0)];
        assert!(matches!(
            sensing_graph(&states, &[spec(), spec()]),
            Err(FovError::CoincidentAgents(0, 1))
        ));
    }

    #[test]
    fn sensing_graph_chain_configuration() {
        // four agents on a line, each follower's forward sector holding its
        // out-neighbor, produces exactly the preselected chain
        let s = FovSector::new(0.0, FRAC_PI_2, 3.5).unwrap();
        let spec = || {
            RobotSpec::new(vec![(s, FovApproximation::default_for(&s))], 10.0, 0.8).unwrap()
        };
        let states = [
            AgentPose::new(29.65, 10.0, PI),
            AgentPose::new(26.7, 10.0, PI),
            AgentPose::new(23.75, 10.0, PI),
            AgentPose::new(20.8, 10.0, PI),
        ];
        let (g, assign) = sensing_graph(&states, &[spec(), spec(), spec(), spec()]).unwrap();
        assert_eq!(g.edges(), &[(0, 1), (1, 2), (2, 3)]);
        assert_eq!(assign, vec![0, 0, 0]);
    }

    #[test]
    fn quality_no_exclusion_overlap_equals_disk_minus_sector() {
        // exclusion disks pushed far out: the approximation is the full
        // inclusion disk, so only false positives remain
        let s = sector90();
        let far = 100.0;
        let a = FovApproximation::new(
            10.0,
            5.0,
            [
                VirtualOffset::new(0.0, v(0.0, far)),
                VirtualOffset::new(0.0, v(-far, 0.0)),
                VirtualOffset::new(0.0, v(0.0, -far)),
            ],
            None,
        )
        .unwrap();
        let q = approximation_quality(&s, &a, 0.05).unwrap();
        assert_eq!(q.false_negative_area, 0.0);
        let disk = std::f64::consts::PI * 100.0;
        let sector_area = disk / 4.0;
        assert!((q.false_positive_area - (disk - sector_area)).abs() < 1.0);
    }

    #[test]
    fn quality_is_deterministic() {
        let s = sector90();
        let a = FovApproximation::default_for(&s);
        let q1 = approximation_quality(&s, &a, 0.1).unwrap();
        let q2 = approximation_quality(&s, &a, 0.1).unwrap();
        assert_eq!(q1, q2);
    }

    #[test]
    fn shrinking_inclusion_radius_increases_false_negatives() {
        let s = sector90();
        let a = FovApproximation::default_for(&s);
        let mut half = a.clone();
        half.rho1 = 5.0;
        let qa = approximation_quality(&s, &a, 0.05).unwrap();
        let qh = approximation_quality(&s, &half, 0.05).unwrap();
        assert!(qh.false_negative_area > qa.false_negative_area);
    }

    #[test]
    fn fit_budget_one_returns_default() {
        let s = sector90();
        let fitted = fit_approximation(&s, 0.05, 1).unwrap();
        assert_eq!(fitted, FovApproximation::default_for(&s));
    }

    #[test]
    fn fit_errors() {
        let s = sector90();
        assert!(matches!(
            fit_approximation(&s, 0.0, 10),
            Err(FovError::BadResolution(_))
        ));
        assert!(matches!(
            fit_approximation(&s, 0.05, 0),
            Err(FovError::BadBudget)
        ));
        // grid too coarse to cover 100 cells
        assert!(matches!(
            fit_approximation(&s, 10.0, 10),
            Err(FovError::DegenerateGrid { .. })
        ));
    }

    #[test]
    fn fitted_iou_matches_pinned_oracle_values() {
        // Regression constants from the brute-force grid oracle, computed
        // once at resolution 0.05 for the 90-degree, 10 m sector.
        const DEFAULT_IOU: f64 = 0.697_907_894_153_627_97;
        const FITTED_IOU_BUDGET_200: f64 = 0.968_927_967_957_944_78;

        let s = sector90();
        let default = FovApproximation::default_for(&s);
        let qd = approximation_quality(&s, &default, 0.05).unwrap();
        assert!((qd.iou - DEFAULT_IOU).abs() < 1e-9, "default iou {}", qd.iou);

        let fitted = fit_approximation(&s, 0.05, 200).unwrap();
        let qf = approximation_quality(&s, &fitted, 0.05).unwrap();
        assert!(
            (qf.iou - FITTED_IOU_BUDGET_200).abs() < 1e-9,
            "fitted iou {}",
            qf.iou
        );
        assert!(qf.iou >= qd.iou);
    }
}
