//! Scenario geometry: antenna, user and scatterer placement around a single
//! box-shaped obstacle.
//!
//! Antennas share one height; users and scatterers are drawn uniformly
//! inside the area (each class within its own height band) and rejected
//! when they fall inside the obstacle.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point in 3-D space, metres. Serialized as `[x, y, z]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point3(pub [f64; 3]);

impl Point3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Point3([x, y, z])
    }

    pub fn x(&self) -> f64 {
        self.0[0]
    }

    pub fn y(&self) -> f64 {
        self.0[1]
    }

    pub fn z(&self) -> f64 {
        self.0[2]
    }

    pub fn distance(&self, other: &Point3) -> f64 {
        self.distance_squared(other).sqrt()
    }

    pub fn distance_squared(&self, other: &Point3) -> f64 {
        let dx = self.0[0] - other.0[0];
        let dy = self.0[1] - other.0[1];
        let dz = self.0[2] - other.0[2];
        dx * dx + dy * dy + dz * dz
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|c| c.is_finite())
    }
}

/// Axis-aligned box given by its two extreme corners.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub min: Point3,
    pub max: Point3,
}

impl Aabb {
    pub fn new(min: Point3, max: Point3) -> Self {
        Aabb { min, max }
    }

    pub fn is_valid(&self) -> bool {
        self.min.is_finite() && self.max.is_finite() && (0..3).all(|i| self.min.0[i] <= self.max.0[i])
    }

    /// Closed containment test.
    pub fn contains(&self, p: &Point3) -> bool {
        (0..3).all(|i| p.0[i] >= self.min.0[i] && p.0[i] <= self.max.0[i])
    }

    /// Whether the closed segment `a -> b` touches the box (slab test).
    pub fn intersects_segment(&self, a: &Point3, b: &Point3) -> bool {
        let mut t_enter = 0.0_f64;
        let mut t_exit = 1.0_f64;
        for i in 0..3 {
            let origin = a.0[i];
            let dir = b.0[i] - a.0[i];
            let (lo, hi) = (self.min.0[i], self.max.0[i]);
            if dir == 0.0 {
                if origin < lo || origin > hi {
                    return false;
                }
                continue;
            }
            let inv = 1.0 / dir;
            let mut t0 = (lo - origin) * inv;
            let mut t1 = (hi - origin) * inv;
            if t0 > t1 {
                std::mem::swap(&mut t0, &mut t1);
            }
            t_enter = t_enter.max(t0);
            t_exit = t_exit.min(t1);
            if t_enter > t_exit {
                return false;
            }
        }
        true
    }
}

/// Placement parameters for [`generate_geometry`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeometryConfig {
    pub n_tx: usize,
    pub n_users: usize,
    pub n_scatterers: usize,
    pub area: Aabb,
    pub obstacle: Aabb,
    /// Common height of every transmit antenna.
    pub tx_height: f64,
    /// Height band `[lo, hi]` for users.
    pub user_height: [f64; 2],
    /// Height band `[lo, hi]` for scatterers.
    pub scatterer_height: [f64; 2],
    /// Rejection-sampling attempts allowed per entity.
    pub max_attempts: usize,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        GeometryConfig {
            n_tx: 64,
            n_users: 8,
            n_scatterers: 75,
            area: Aabb::new(Point3::new(0.0, 0.0, 0.0), Point3::new(200.0, 200.0, 30.0)),
            obstacle: Aabb::new(Point3::new(80.0, 70.0, 0.0), Point3::new(120.0, 130.0, 25.0)),
            tx_height: 10.0,
            user_height: [1.5, 1.5],
            scatterer_height: [0.0, 20.0],
            max_attempts: 10_000,
        }
    }
}

impl GeometryConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_tx == 0 {
            return Err(Error::Parameter("n_tx must be at least 1".into()));
        }
        if self.n_users == 0 {
            return Err(Error::Parameter("n_users must be at least 1".into()));
        }
        if !self.area.is_valid() || !self.obstacle.is_valid() {
            return Err(Error::Parameter("area and obstacle must be finite boxes with min <= max".into()));
        }
        let (zlo, zhi) = (self.area.min.z(), self.area.max.z());
        let in_band = |h: f64| h.is_finite() && h >= zlo && h <= zhi;
        if !in_band(self.tx_height) {
            return Err(Error::Parameter(format!("tx_height {} outside area", self.tx_height)));
        }
        for (name, band) in [("user_height", self.user_height), ("scatterer_height", self.scatterer_height)] {
            if !(in_band(band[0]) && in_band(band[1]) && band[0] <= band[1]) {
                return Err(Error::Parameter(format!("{name} {band:?} outside area or reversed")));
            }
        }
        if self.max_attempts == 0 {
            return Err(Error::Parameter("max_attempts must be positive".into()));
        }
        Ok(())
    }
}

/// Positions of every entity in a scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioGeometry {
    pub tx_positions: Vec<Point3>,
    pub user_positions: Vec<Point3>,
    pub scatterer_positions: Vec<Point3>,
    pub obstacle: Aabb,
    pub area_bounds: Aabb,
}

impl ScenarioGeometry {
    pub fn n_tx(&self) -> usize {
        self.tx_positions.len()
    }

    pub fn n_users(&self) -> usize {
        self.user_positions.len()
    }

    pub fn n_scatterers(&self) -> usize {
        self.scatterer_positions.len()
    }

    /// Checks the structural invariants (counts, bounds, distinct antennas).
    pub fn validate(&self) -> Result<()> {
        if self.tx_positions.is_empty() || self.user_positions.is_empty() {
            return Err(Error::InvalidInput("geometry needs at least one antenna and one user".into()));
        }
        if !self.area_bounds.is_valid() || !self.obstacle.is_valid() {
            return Err(Error::InvalidInput("invalid area or obstacle box".into()));
        }
        let all = self.tx_positions.iter().chain(&self.user_positions).chain(&self.scatterer_positions);
        for p in all {
            if !p.is_finite() || !self.area_bounds.contains(p) {
                return Err(Error::InvalidInput(format!("point {:?} outside area bounds", p.0)));
            }
        }
        for (i, a) in self.tx_positions.iter().enumerate() {
            if self.tx_positions[..i].contains(a) {
                return Err(Error::InvalidInput(format!("antenna {i} duplicates an earlier antenna")));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let g: ScenarioGeometry = serde_json::from_str(s)?;
        g.validate()?;
        Ok(g)
    }
}

fn sample_outside<R: Rng>(
    rng: &mut R,
    area: &Aabb,
    obstacle: &Aabb,
    z_band: [f64; 2],
    max_attempts: usize,
    what: &'static str,
) -> Result<Point3> {
    for _ in 0..max_attempts {
        let x = uniform(rng, area.min.x(), area.max.x());
        let y = uniform(rng, area.min.y(), area.max.y());
        let z = uniform(rng, z_band[0], z_band[1]);
        let p = Point3::new(x, y, z);
        if !obstacle.contains(&p) {
            return Ok(p);
        }
    }
    Err(Error::Placement { what, attempts: max_attempts })
}

fn uniform<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.gen_range(lo..=hi)
    }
}

/// Places antennas, users and scatterers. Pure function of `(config, seed)`.
pub fn generate_geometry(config: &GeometryConfig, seed: u64) -> Result<ScenarioGeometry> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tx_band = [config.tx_height, config.tx_height];

    let mut tx_positions = Vec::with_capacity(config.n_tx);
    while tx_positions.len() < config.n_tx {
        let mut placed = None;
        for _ in 0..config.max_attempts {
            let p = sample_outside(&mut rng, &config.area, &config.obstacle, tx_band, config.max_attempts, "antenna")?;
            if !tx_positions.contains(&p) {
                placed = Some(p);
                break;
            }
        }
        match placed {
            Some(p) => tx_positions.push(p),
            None => return Err(Error::Placement { what: "antenna", attempts: config.max_attempts }),
        }
    }

    let user_positions = (0..config.n_users)
        .map(|_| sample_outside(&mut rng, &config.area, &config.obstacle, config.user_height, config.max_attempts, "user"))
        .collect::<Result<Vec<_>>>()?;
    let scatterer_positions = (0..config.n_scatterers)
        .map(|_| {
            sample_outside(
                &mut rng,
                &config.area,
                &config.obstacle,
                config.scatterer_height,
                config.max_attempts,
                "scatterer",
            )
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(ScenarioGeometry {
        tx_positions,
        user_positions,
        scatterer_positions,
        obstacle: config.obstacle,
        area_bounds: config.area,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_scenario_counts_and_bounds() {
        let cfg = GeometryConfig::default();
        let g = generate_geometry(&cfg, 1).unwrap();
        assert_eq!((g.n_tx(), g.n_users(), g.n_scatterers()), (64, 8, 75));
        g.validate().unwrap();
        for p in g.user_positions.iter().chain(&g.scatterer_positions).chain(&g.tx_positions) {
            assert!(!g.obstacle.contains(p));
        }
        assert!(g.tx_positions.iter().all(|p| p.z() == cfg.tx_height));
    }

    #[test]
    fn minimal_counts() {
        let cfg = GeometryConfig { n_tx: 1, n_users: 1, n_scatterers: 0, ..Default::default() };
        let g = generate_geometry(&cfg, 7).unwrap();
        assert_eq!((g.n_tx(), g.n_users(), g.n_scatterers()), (1, 1, 0));
    }

    #[test]
    fn deterministic_per_seed() {
        let cfg = GeometryConfig::default();
        let a = generate_geometry(&cfg, 42).unwrap();
        let b = generate_geometry(&cfg, 42).unwrap();
        assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
        let c = generate_geometry(&cfg, 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn obstacle_covering_area_fails_placement() {
        let area = Aabb::new(Point3::new(0.0, 0.0, 0.0), Point3::new(10.0, 10.0, 10.0));
        let cfg = GeometryConfig {
            area,
            obstacle: area,
            tx_height: 5.0,
            user_height: [1.0, 1.0],
            scatterer_height: [0.0, 10.0],
            max_attempts: 50,
            ..Default::default()
        };
        assert!(matches!(generate_geometry(&cfg, 1), Err(Error::Placement { what: "antenna", .. })));
    }

    #[test]
    fn rejects_zero_counts() {
        let cfg = GeometryConfig { n_tx: 0, ..Default::default() };
        assert!(matches!(generate_geometry(&cfg, 1), Err(Error::Parameter(_))));
    }

    #[test]
    fn segment_box_tests() {
        let b = Aabb::new(Point3::new(-1.0, -1.0, -1.0), Point3::new(1.0, 1.0, 1.0));
        assert!(b.intersects_segment(&Point3::new(-5.0, 0.0, 0.0), &Point3::new(5.0, 0.0, 0.0)));
        assert!(!b.intersects_segment(&Point3::new(-5.0, 2.0, 0.0), &Point3::new(5.0, 2.0, 0.0)));
        // stops short of the box
        assert!(!b.intersects_segment(&Point3::new(-5.0, 0.0, 0.0), &Point3::new(-2.0, 0.0, 0.0)));
        // diagonal miss past a corner
        assert!(!b.intersects_segment(&Point3::new(0.0, 3.0, 0.0), &Point3::new(3.0, 0.0, 0.0)));
        assert!(b.intersects_segment(&Point3::new(0.0, 1.5, 0.0), &Point3::new(1.5, 0.0, 0.0)));
    }

    #[test]
    fn json_roundtrip() {
        let g = generate_geometry(&GeometryConfig { n_tx: 3, n_users: 2, n_scatterers: 4, ..Default::default() }, 5).unwrap();
        let s = g.to_json().unwrap();
        assert!(s.contains("\"tx_positions\""));
        assert_eq!(ScenarioGeometry::from_json(&s).unwrap(), g);
    }
}
