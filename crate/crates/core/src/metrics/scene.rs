use crate::anchors::ProxyBody;
use crate::error::{Error, Result};
use crate::geometry::rotation_from_6d;
use crate::scene::VoxelGrid;
use crate::trajectory::Trajectory;

pub const DEFAULT_CONTACT_TAU: f64 = 0.05;

/// Body for frame `i`: one body per frame, or a single body for all.
fn body_for(bodies: &[ProxyBody], i: usize, frames: usize) -> Result<&ProxyBody> {
    match bodies.len() {
        1 => Ok(&bodies[0]),
        n if n == frames => Ok(&bodies[i]),
        n => Err(Error::DimensionMismatch {
            context: "bodies per frame",
            expected: frames,
            found: n,
        }),
    }
}

fn per_frame(
    traj: &Trajectory,
    bodies: &[ProxyBody],
    test: impl Fn(&ProxyBody, &nalgebra::Matrix3<f64>, &crate::Vec3) -> bool,
) -> Result<f64> {
    if traj.is_empty() {
        return Err(Error::InvalidArgument("trajectory has no frames".into()));
    }
    let mut hits = 0usize;
    for (i, f) in traj.frames.iter().enumerate() {
        let body = body_for(bodies, i, traj.len())?;
        let r = rotation_from_6d(&f.phi).ok_or(Error::Orthonormalization { attempts: 1 })?;
        if test(body, &r, &f.t) {
            hits += 1;
        }
    }
    Ok(hits as f64 / traj.len() as f64)
}

/// Fraction of frames whose capsule samples all have `sdf >= 0`.
pub fn non_collision(traj: &Trajectory, bodies: &[ProxyBody], grid: &VoxelGrid) -> Result<f64> {
    per_frame(traj, bodies, |body, r, t| {
        body.posed(t, r).samples.iter().all(|p| grid.sdf_at(p) >= 0.0)
    })
}

/// Fraction of frames with at least one designated contact within `tau`
/// of a surface.
pub fn contact(traj: &Trajectory, bodies: &[ProxyBody], grid: &VoxelGrid, tau: f64) -> Result<f64> {
    per_frame(traj, bodies, |body, r, t| {
        body.posed(t, r).contacts.iter().any(|p| grid.sdf_at(p).abs() <= tau)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::anchors::{proxy_body, ActionLabel, PoseVector};
    use crate::geometry::yaw_to_6d;
    use crate::scene::{rooms::RoomBuilder, rooms::DEFAULT_SPACING, voxelize};
    use crate::trajectory::Frame;
    use crate::Vec3;

    fn traj(points: &[Vec3]) -> Trajectory {
        Trajectory {
            frames: points
                .iter()
                .map(|&t| Frame {
                    t,
                    phi: yaw_to_6d(0.0),
                    action: ActionLabel::Stand,
                })
                .collect(),
            fps: 30.0,
        }
    }

    fn room() -> (VoxelGrid, ProxyBody) {
        let mut b = RoomBuilder::new(DEFAULT_SPACING);
        b.floor(6.0, 3.0);
        b.add_box(Vec3::new(4.0, 0.0, 0.0), Vec3::new(6.0, 3.0, 3.0));
        let body = proxy_body(&PoseVector::zeros(), ActionLabel::Stand);
        (voxelize(&b.build(), 0.25).unwrap(), body)
    }

    #[test]
    fn open_space_is_collision_free_and_grounded() {
        let (grid, body) = room();
        let h = body.root_height;
        let t = traj(
            &(0..10)
                .map(|i| Vec3::new(1.0 + i as f64 * 0.1, 1.5, h))
                .collect::<Vec<_>>(),
        );
        assert_eq!(non_collision(&t, std::slice::from_ref(&body), &grid).unwrap(), 1.0);
        assert_eq!(contact(&t, &[body], &grid, DEFAULT_CONTACT_TAU).unwrap(), 1.0);
    }

    #[test]
    fn half_inside_obstacle() {
        let (grid, body) = room();
        let h = body.root_height;
        let mut pts: Vec<Vec3> = (0..5).map(|i| Vec3::new(1.0 + i as f64 * 0.2, 1.5, h)).collect();
        pts.extend((0..5).map(|i| Vec3::new(4.8 + i as f64 * 0.2, 1.5, h)));
        assert_eq!(non_collision(&traj(&pts), &[body], &grid).unwrap(), 0.5);
    }

    #[test]
    fn floating_frames_lose_contact() {
        let (grid, body) = room();
        let h = body.root_height;
        let mut pts: Vec<Vec3> = (0..4).map(|i| Vec3::new(1.0 + i as f64 * 0.2, 1.5, h)).collect();
        pts.extend((0..4).map(|i| Vec3::new(1.0 + i as f64 * 0.2, 1.5, h + 1.0)));
        let t = traj(&pts);
        assert_eq!(
            contact(&t, std::slice::from_ref(&body), &grid, DEFAULT_CONTACT_TAU).unwrap(),
            0.5
        );
        let high = traj(&pts[4..]);
        assert_eq!(contact(&high, &[body], &grid, DEFAULT_CONTACT_TAU).unwrap(), 0.0);
    }

    #[test]
    fn empty_grid_never_collides() {
        let grid = VoxelGrid::empty(Vec3::zeros(), 0.25, [4, 4, 4]).unwrap();
        let body = proxy_body(&PoseVector::zeros(), ActionLabel::Stand);
        let t = traj(&[Vec3::new(0.5, 0.5, 0.5)]);
        assert_eq!(non_collision(&t, &[body], &grid).unwrap(), 1.0);
    }
}
