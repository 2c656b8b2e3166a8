//! Proxy body: labeled contact points and capsules standing in for a full
//! body mesh. The body frame has its root at the origin, +x forward and +z
//! up; `root_height` is the root's height above the surface the body's
//! primary support rests on.

use nalgebra::Matrix3;

use super::{ActionLabel, PoseVector};
use crate::geometry::Vec3;

/// Sample points per capsule: 3 axial stations with 4 ring points each,
/// plus the two end caps.
pub const CAPSULE_SAMPLES: usize = 14;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ContactLabel {
    Pelvis,
    Back,
    LeftFoot,
    RightFoot,
    LeftHand,
    RightHand,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactPoint {
    pub label: ContactLabel,
    pub position: Vec3,
    /// Whether the point is expected to touch the scene for this action.
    pub designated: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Capsule {
    pub a: Vec3,
    pub b: Vec3,
    pub radius: f64,
}

impl Capsule {
    fn new(a: [f64; 3], b: [f64; 3], radius: f64) -> Self {
        Capsule {
            a: Vec3::from(a),
            b: Vec3::from(b),
            radius,
        }
    }

    /// Surface sample points in the capsule's frame.
    pub fn sample_points(&self) -> [Vec3; CAPSULE_SAMPLES] {
        let axis = self.b - self.a;
        let len = axis.norm();
        let dir = if len > 1e-12 { axis / len } else { Vec3::z() };
        let helper = if dir.z.abs() < 0.9 { Vec3::z() } else { Vec3::x() };
        let e1 = dir.cross(&helper).normalize();
        let e2 = dir.cross(&e1);
        let r = self.radius;
        let mut out = [Vec3::zeros(); CAPSULE_SAMPLES];
        let mut n = 0;
        for s in [0.0, 0.5, 1.0] {
            let c = self.a + axis * s;
            for off in [e1, e2, -e1, -e2] {
                out[n] = c + off * r;
                n += 1;
            }
        }
        out[12] = self.a - dir * r;
        out[13] = self.b + dir * r;
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProxyBody {
    pub action: ActionLabel,
    pub root_height: f64,
    pub contacts: Vec<ContactPoint>,
    pub capsules: Vec<Capsule>,
}

/// A body transformed into the world.
#[derive(Debug, Clone, PartialEq)]
pub struct PosedBody {
    /// Designated contact points.
    pub contacts: Vec<Vec3>,
    /// Capsule surface samples.
    pub samples: Vec<Vec3>,
}

impl ProxyBody {
    pub fn designated_contacts(&self) -> impl Iterator<Item = &ContactPoint> {
        self.contacts.iter().filter(|c| c.designated)
    }

    /// All capsule samples in the body frame.
    pub fn sample_points(&self) -> Vec<Vec3> {
        self.capsules.iter().flat_map(|c| c.sample_points()).collect()
    }

    pub fn posed(&self, t: &Vec3, rotation: &Matrix3<f64>) -> PosedBody {
        PosedBody {
            contacts: self.designated_contacts().map(|c| t + rotation * c.position).collect(),
            samples: self.sample_points().iter().map(|p| t + rotation * p).collect(),
        }
    }
}

fn contact(label: ContactLabel, p: [f64; 3], designated: bool) -> ContactPoint {
    ContactPoint {
        label,
        position: Vec3::from(p),
        designated,
    }
}

/// Deterministic body for a pose and action. A few pose coordinates,
/// squashed by `tanh`, modulate heights, stance width and lean.
pub fn proxy_body(theta: &PoseVector, action: ActionLabel) -> ProxyBody {
    let g: [f64; 4] = std::array::from_fn(|i| theta.0[i].tanh());
    use ContactLabel::*;
    match action {
        ActionLabel::Stand => {
            let h = 0.90 + 0.04 * g[0];
            let w = 0.10 + 0.03 * g[1];
            let lean = 0.05 * g[2];
            ProxyBody {
                action,
                root_height: h,
                contacts: vec![
                    contact(Pelvis, [0.0, 0.0, 0.0], false),
                    contact(LeftFoot, [0.05, w, -h], true),
                    contact(RightFoot, [0.05, -w, -h], true),
                    contact(LeftHand, [0.02, 0.25, -0.05], false),
                    contact(RightHand, [0.02, -0.25, -0.05], false),
                ],
                capsules: vec![
                    Capsule::new([0.0, w, -h + 0.09], [0.0, w, -0.05], 0.07),
                    Capsule::new([0.0, -w, -h + 0.09], [0.0, -w, -0.05], 0.07),
                    Capsule::new([0.0, 0.0, 0.05], [lean, 0.0, 0.55], 0.14),
                    Capsule::new([lean, 0.0, 0.65], [lean, 0.0, 0.75], 0.10),
                ],
            }
        }
        ActionLabel::Walk => {
            let h = 0.90 + 0.04 * g[0];
            let s = 0.15 + 0.05 * g[1];
            let lean = 0.05 + 0.03 * g[2];
            ProxyBody {
                action,
                root_height: h,
                contacts: vec![
                    contact(Pelvis, [0.0, 0.0, 0.0], false),
                    contact(LeftFoot, [s, 0.1, -h], true),
                    contact(RightFoot, [-s, -0.1, -h], true),
                    contact(LeftHand, [-s, 0.25, -0.05], false),
                    contact(RightHand, [s, -0.25, -0.05], false),
                ],
                capsules: vec![
                    Capsule::new([s, 0.1, -h + 0.09], [0.0, 0.1, -0.05], 0.07),
                    Capsule::new([-s, -0.1, -h + 0.09], [0.0, -0.1, -0.05], 0.07),
                    Capsule::new([0.0, 0.0, 0.05], [lean, 0.0, 0.55], 0.14),
                    Capsule::new([lean, 0.0, 0.65], [lean, 0.0, 0.75], 0.10),
                ],
            }
        }
        ActionLabel::Squat => {
            let h = 0.50 + 0.04 * g[0];
            let w = 0.15 + 0.03 * g[1];
            let lean = 0.15 + 0.05 * g[2];
            ProxyBody {
                action,
                root_height: h,
                contacts: vec![
                    contact(Pelvis, [0.0, 0.0, 0.0], false),
                    contact(LeftFoot, [0.18, w, -h], true),
                    contact(RightFoot, [0.18, -w, -h], true),
                    contact(LeftHand, [0.35, 0.2, -0.1], false),
                    contact(RightHand, [0.35, -0.2, -0.1], false),
                ],
                capsules: vec![
                    Capsule::new([0.18, w, -h + 0.09], [0.25, w, -0.15], 0.07),
                    Capsule::new([0.18, -w, -h + 0.09], [0.25, -w, -0.15], 0.07),
                    Capsule::new([0.25, w, -0.12], [0.0, 0.1, -0.02], 0.08),
                    Capsule::new([0.25, -w, -0.12], [0.0, -0.1, -0.02], 0.08),
                    Capsule::new([0.05, 0.0, 0.08], [lean, 0.0, 0.55], 0.14),
                ],
            }
        }
        ActionLabel::Sit => {
            let rh = 0.10;
            let seat = 0.45 + 0.03 * g[0];
            let knee = 0.42 + 0.04 * g[1];
            let lean = -0.08 + 0.04 * g[2];
            let foot_z = -(rh + seat);
            ProxyBody {
                action,
                root_height: rh,
                contacts: vec![
                    contact(Pelvis, [0.0, 0.0, -rh], true),
                    contact(LeftFoot, [knee + 0.03, 0.12, foot_z], true),
                    contact(RightFoot, [knee + 0.03, -0.12, foot_z], true),
                    contact(LeftHand, [0.15, 0.25, -0.02], false),
                    contact(RightHand, [0.15, -0.25, -0.02], false),
                ],
                capsules: vec![
                    Capsule::new([0.02, 0.1, -0.02], [knee, 0.12, -0.02], 0.07),
                    Capsule::new([0.02, -0.1, -0.02], [knee, -0.12, -0.02], 0.07),
                    Capsule::new([knee + 0.03, 0.12, -0.12], [knee + 0.03, 0.12, foot_z + 0.09], 0.06),
                    Capsule::new([knee + 0.03, -0.12, -0.12], [knee + 0.03, -0.12, foot_z + 0.09], 0.06),
                    Capsule::new([-0.05, 0.0, 0.08], [lean, 0.0, 0.6], 0.14),
                ],
            }
        }
        ActionLabel::Lie => {
            let rh = 0.12;
            let leg = 0.80 + 0.05 * g[0];
            let spread = 0.10 + 0.03 * g[1];
            ProxyBody {
                action,
                root_height: rh,
                contacts: vec![
                    contact(Pelvis, [0.0, 0.0, -rh], true),
                    contact(Back, [-0.45, 0.0, -rh], true),
                    contact(LeftFoot, [leg + 0.05, spread, -rh], true),
                    contact(RightFoot, [leg + 0.05, -spread, -rh], true),
                    contact(LeftHand, [-0.2, 0.3, -rh + 0.02], false),
                    contact(RightHand, [-0.2, -0.3, -rh + 0.02], false),
                ],
                capsules: vec![
                    Capsule::new([0.05, spread, -0.03], [leg, spread, -0.03], 0.08),
                    Capsule::new([0.05, -spread, -0.03], [leg, -spread, -0.03], 0.08),
                    Capsule::new([-0.05, 0.0, 0.03], [-0.65, 0.0, 0.03], 0.14),
                    Capsule::new([-0.75, 0.0, 0.0], [-0.85, 0.0, 0.0], 0.10),
                ],
            }
        }
    }
}
