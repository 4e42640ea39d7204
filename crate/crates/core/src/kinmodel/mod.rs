//! Articulated kinematic trees: model construction, forward kinematics,
//! site placement, and geometric Jacobians.
//!
//! A [`RobotModel`] is immutable after construction and safe to share across
//! threads; FK and Jacobian evaluation are pure functions of the model and a
//! joint vector. Both glove and dex-hand embodiments use the same machinery.

mod parse;

pub use parse::{model_to_urdf, parse_robot_model, parse_robot_model_with_sites, ParseError, ParsedModel};

use nalgebra::{DMatrix, Unit, UnitQuaternion, Vector3};
use std::collections::HashMap;
use thiserror::Error;

use crate::transform::RigidTransform;

/// Axis vectors must be unit within this tolerance (model invariant).
pub const AXIS_UNIT_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("duplicate name `{0}`")]
    DuplicateName(String),
    #[error("joint `{joint}` references unknown link `{link}`")]
    UnknownLink { joint: String, link: String },
    #[error("link `{link}` is the child of both `{first}` and `{second}`")]
    MultipleParents {
        link: String,
        first: String,
        second: String,
    },
    #[error("joint graph has no root link")]
    NoRoot,
    #[error("joint graph has multiple roots: `{0}` and `{1}`")]
    MultipleRoots(String, String),
    #[error("link `{0}` is unreachable from the root (cycle or disconnected subtree)")]
    NotATree(String),
    #[error("joint `{joint}` axis norm {norm} deviates from 1 beyond {AXIS_UNIT_TOL}")]
    NonUnitAxis { joint: String, norm: f64 },
    #[error("non-fixed joint `{0}` is missing position limits")]
    MissingLimits(String),
    #[error("joint `{joint}` limits are inverted: {lower} > {upper}")]
    InvalidLimits {
        joint: String,
        lower: f64,
        upper: f64,
    },
    #[error("site `{site}` references unknown link `{link}`")]
    UnknownSiteLink { site: String, link: String },
    #[error("site `{0}` direction vector has zero norm")]
    ZeroDirection(String),
    #[error("model has no links")]
    Empty,
}

#[derive(Debug, Error)]
pub enum KinError {
    #[error("joint vector length {got} does not match model dof {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("unknown site `{0}`")]
    UnknownSite(String),
    #[error("unknown link `{0}`")]
    UnknownLink(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JointKind {
    Revolute,
    Prismatic,
    Fixed,
}

impl JointKind {
    pub fn is_actuated(self) -> bool {
        !matches!(self, JointKind::Fixed)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            JointKind::Revolute => "revolute",
            JointKind::Prismatic => "prismatic",
            JointKind::Fixed => "fixed",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SiteKind {
    Keypoint,
    Tactile,
    Tcp,
}

impl SiteKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SiteKind::Keypoint => "keypoint",
            SiteKind::Tactile => "tactile",
            SiteKind::Tcp => "tcp",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Link {
    pub name: String,
}

#[derive(Debug, Clone)]
pub struct Joint {
    pub name: String,
    pub parent: usize,
    pub child: usize,
    pub kind: JointKind,
    pub axis: Unit<Vector3<f64>>,
    pub origin: RigidTransform,
    /// Position limits (rad or m); always present on non-fixed joints.
    pub limits: Option<(f64, f64)>,
}

#[derive(Debug, Clone)]
pub struct Site {
    pub name: String,
    pub parent_link: usize,
    pub offset: RigidTransform,
    pub kind: SiteKind,
    /// Used as the keypoint orientation vector d_i once rotated into world.
    pub local_direction: Unit<Vector3<f64>>,
}

/// Joint positions for the non-fixed joints of one model, in model order.
#[derive(Debug, Clone, PartialEq)]
pub struct JointVector(Vec<f64>);

impl JointVector {
    pub fn new(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, f64> {
        self.0.iter()
    }
}

impl From<Vec<f64>> for JointVector {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

impl std::ops::Index<usize> for JointVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl std::ops::IndexMut<usize> for JointVector {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.0[i]
    }
}

/// Validated articulated model: a joint tree rooted at a single base link.
#[derive(Debug, Clone)]
pub struct RobotModel {
    name: String,
    links: Vec<Link>,
    joints: Vec<Joint>,
    sites: Vec<Site>,
    base_link: usize,
    link_index: HashMap<String, usize>,
    site_index: HashMap<String, usize>,
    /// Per link: index of the joint whose child it is (None for the base).
    parent_joint: Vec<Option<usize>>,
    /// Link indices in parent-before-child order, base first.
    topo_links: Vec<usize>,
    /// Non-fixed joint indices in model order; defines joint-vector layout.
    actuated: Vec<usize>,
    /// Per joint: slot in the joint vector (None for fixed joints).
    actuated_slot: Vec<Option<usize>>,
}

impl RobotModel {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn joints(&self) -> &[Joint] {
        &self.joints
    }

    pub fn sites(&self) -> &[Site] {
        &self.sites
    }

    pub fn base_link_name(&self) -> &str {
        &self.links[self.base_link].name
    }

    /// Number of non-fixed joints (= joint vector length).
    pub fn dof(&self) -> usize {
        self.actuated.len()
    }

    pub fn link_index(&self, name: &str) -> Option<usize> {
        self.link_index.get(name).copied()
    }

    pub fn site(&self, name: &str) -> Option<&Site> {
        self.site_index.get(name).map(|&i| &self.sites[i])
    }

    pub fn site_position(&self, name: &str) -> Option<usize> {
        self.site_index.get(name).copied()
    }

    /// Names of the model's actuated joints, model order.
    pub fn actuated_joint_names(&self) -> Vec<&str> {
        self.actuated
            .iter()
            .map(|&j| self.joints[j].name.as_str())
            .collect()
    }

    /// (lower, upper) per actuated joint, model order.
    pub fn joint_limits(&self) -> Vec<(f64, f64)> {
        self.actuated
            .iter()
            .map(|&j| self.joints[j].limits.expect("actuated joints carry limits"))
            .collect()
    }

    /// Mid-range configuration: reproducible, always within limits.
    pub fn mid_range_config(&self) -> JointVector {
        JointVector(
            self.joint_limits()
                .iter()
                .map(|(lo, hi)| 0.5 * (lo + hi))
                .collect(),
        )
    }

    /// Clamp to limits; returns the clamped vector and the indices touched.
    pub fn clamp(&self, q: &JointVector) -> Result<(JointVector, Vec<usize>), KinError> {
        if q.len() != self.dof() {
            return Err(KinError::DimensionMismatch {
                expected: self.dof(),
                got: q.len(),
            });
        }
        let mut out = q.clone();
        let mut touched = Vec::new();
        for (slot, (lo, hi)) in self.joint_limits().into_iter().enumerate() {
            let v = out.0[slot];
            let c = v.clamp(lo, hi);
            if c != v {
                out.0[slot] = c;
                touched.push(slot);
            }
        }
        Ok((out, touched))
    }

    /// Sites of one kind, in model order.
    pub fn sites_of_kind(&self, kind: SiteKind) -> Vec<&Site> {
        self.sites.iter().filter(|s| s.kind == kind).collect()
    }

    /// Names of tactile sites in model order; index j in a tactile frame
    /// refers to the j-th entry of this list.
    pub fn tactile_site_names(&self) -> Vec<&str> {
        self.sites
            .iter()
            .filter(|s| s.kind == SiteKind::Tactile)
            .map(|s| s.name.as_str())
            .collect()
    }
}

/// Incremental model construction; all invariants are checked in [`ModelBuilder::build`].
pub struct ModelBuilder {
    name: String,
    links: Vec<Link>,
    joints: Vec<Joint>,
    sites: Vec<Site>,
    link_index: HashMap<String, usize>,
    pending_error: Option<ModelError>,
}

impl ModelBuilder {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            links: Vec::new(),
            joints: Vec::new(),
            sites: Vec::new(),
            link_index: HashMap::new(),
            pending_error: None,
        }
    }

    fn fail(&mut self, e: ModelError) -> &mut Self {
        if self.pending_error.is_none() {
            self.pending_error = Some(e);
        }
        self
    }

    pub fn link(&mut self, name: impl Into<String>) -> &mut Self {
        let name = name.into();
        if self.link_index.contains_key(&name) {
            return self.fail(ModelError::DuplicateName(name));
        }
        self.link_index.insert(name.clone(), self.links.len());
        self.links.push(Link { name });
        self
    }

    pub fn joint(
        &mut self,
        name: impl Into<String>,
        parent: &str,
        child: &str,
        kind: JointKind,
        axis: Vector3<f64>,
        origin: RigidTransform,
        limits: Option<(f64, f64)>,
    ) -> &mut Self {
        let name = name.into();
        let Some(&parent) = self.link_index.get(parent) else {
            let link = parent.to_owned();
            return self.fail(ModelError::UnknownLink { joint: name, link });
        };
        let Some(&child) = self.link_index.get(child) else {
            let link = child.to_owned();
            return self.fail(ModelError::UnknownLink { joint: name, link });
        };
        let norm = axis.norm();
        if kind.is_actuated() && (norm - 1.0).abs() > AXIS_UNIT_TOL {
            return self.fail(ModelError::NonUnitAxis { joint: name, norm });
        }
        let axis = if norm > 0.0 {
            Unit::new_unchecked(axis / norm)
        } else {
            Vector3::z_axis()
        };
        self.joints.push(Joint {
            name,
            parent,
            child,
            kind,
            axis,
            origin,
            limits,
        });
        self
    }

    pub fn site(
        &mut self,
        name: impl Into<String>,
        parent_link: &str,
        offset: RigidTransform,
        kind: SiteKind,
        local_direction: Vector3<f64>,
    ) -> &mut Self {
        let name = name.into();
        let Some(&parent_link) = self.link_index.get(parent_link) else {
            let link = parent_link.to_owned();
            return self.fail(ModelError::UnknownSiteLink { site: name, link });
        };
        if local_direction.norm() == 0.0 {
            return self.fail(ModelError::ZeroDirection(name));
        }
        self.sites.push(Site {
            name,
            parent_link,
            offset,
            kind,
            local_direction: Unit::new_normalize(local_direction),
        });
        self
    }

    pub fn build(self) -> Result<RobotModel, ModelError> {
        if let Some(e) = self.pending_error {
            return Err(e);
        }
        if self.links.is_empty() {
            return Err(ModelError::Empty);
        }

        let mut seen = HashMap::new();
        for j in &self.joints {
            if seen.insert(j.name.clone(), ()).is_some() {
                return Err(ModelError::DuplicateName(j.name.clone()));
            }
        }
        let mut site_index = HashMap::new();
        for (i, s) in self.sites.iter().enumerate() {
            if site_index.insert(s.name.clone(), i).is_some() {
                return Err(ModelError::DuplicateName(s.name.clone()));
            }
        }

        let mut parent_joint: Vec<Option<usize>> = vec![None; self.links.len()];
        for (ji, j) in self.joints.iter().enumerate() {
            if let Some(prev) = parent_joint[j.child] {
                return Err(ModelError::MultipleParents {
                    link: self.links[j.child].name.clone(),
                    first: self.joints[prev].name.clone(),
                    second: j.name.clone(),
                });
            }
            parent_joint[j.child] = Some(ji);
            if j.kind.is_actuated() {
                match j.limits {
                    None => return Err(ModelError::MissingLimits(j.name.clone())),
                    Some((lo, hi)) if lo > hi => {
                        return Err(ModelError::InvalidLimits {
                            joint: j.name.clone(),
                            lower: lo,
                            upper: hi,
                        })
                    }
                    _ => {}
                }
            }
        }

        let mut base_link = None;
        for (li, p) in parent_joint.iter().enumerate() {
            if p.is_none() {
                match base_link {
                    None => base_link = Some(li),
                    Some(first) => {
                        return Err(ModelError::MultipleRoots(
                            self.links[first].name.clone(),
                            self.links[li].name.clone(),
                        ))
                    }
                }
            }
        }
        let base_link = base_link.ok_or(ModelError::NoRoot)?;

        // Parent-before-child ordering via BFS from the base; anything not
        // reached sits on a cycle or a detached island.
        let mut children: Vec<Vec<usize>> = vec![Vec::new(); self.links.len()];
        for j in &self.joints {
            children[j.parent].push(j.child);
        }
        let mut topo_links = vec![base_link];
        let mut cursor = 0;
        while cursor < topo_links.len() {
            let link = topo_links[cursor];
            cursor += 1;
            topo_links.extend(children[link].iter().copied());
        }
        if topo_links.len() != self.links.len() {
            let mut reached = vec![false; self.links.len()];
            for &l in &topo_links {
                reached[l] = true;
            }
            let missing = reached.iter().position(|r| !r).unwrap();
            return Err(ModelError::NotATree(self.links[missing].name.clone()));
        }

        let mut actuated = Vec::new();
        let mut actuated_slot = vec![None; self.joints.len()];
        for (ji, j) in self.joints.iter().enumerate() {
            if j.kind.is_actuated() {
                actuated_slot[ji] = Some(actuated.len());
                actuated.push(ji);
            }
        }

        Ok(RobotModel {
            name: self.name,
            links: self.links,
            joints: self.joints,
            sites: self.sites,
            base_link,
            link_index: self.link_index,
            site_index,
            parent_joint,
            topo_links,
            actuated,
            actuated_slot,
        })
    }
}

/// World pose and direction of one site under some configuration.
#[derive(Debug, Clone, Copy)]
pub struct SiteState {
    pub pose: RigidTransform,
    pub position: Vector3<f64>,
    pub direction: Vector3<f64>,
}

/// Forward-kinematics solution: world pose of every link, plus the per-joint
/// world frames needed for Jacobians.
#[derive(Debug, Clone)]
pub struct FkSolution<'m> {
    model: &'m RobotModel,
    link_poses: Vec<RigidTransform>,
    /// World axis direction of each joint (post-origin, pre-motion frame).
    joint_axis_world: Vec<Vector3<f64>>,
    /// World position of each joint frame.
    joint_origin_world: Vec<Vector3<f64>>,
    clamped: Vec<usize>,
}

impl<'m> FkSolution<'m> {
    pub fn model(&self) -> &'m RobotModel {
        self.model
    }

    /// Joint-vector slots that were clamped to limits before evaluation.
    pub fn clamped_joints(&self) -> &[usize] {
        &self.clamped
    }

    pub fn link_pose(&self, name: &str) -> Result<&RigidTransform, KinError> {
        let idx = self
            .model
            .link_index(name)
            .ok_or_else(|| KinError::UnknownLink(name.to_owned()))?;
        Ok(&self.link_poses[idx])
    }

    /// (name, world pose) for every link, model order.
    pub fn link_poses(&self) -> impl Iterator<Item = (&str, &RigidTransform)> {
        self.model
            .links
            .iter()
            .zip(&self.link_poses)
            .map(|(l, p)| (l.name.as_str(), p))
    }

    pub fn site_state(&self, name: &str) -> Result<SiteState, KinError> {
        let idx = self
            .model
            .site_position(name)
            .ok_or_else(|| KinError::UnknownSite(name.to_owned()))?;
        Ok(self.site_state_by_index(idx))
    }

    pub fn site_state_by_index(&self, idx: usize) -> SiteState {
        let site = &self.model.sites[idx];
        let pose = &self.link_poses[site.parent_link] * &site.offset;
        let position = *pose.translation();
        let direction = pose.transform_vector(&site.local_direction);
        SiteState {
            pose,
            position,
            direction,
        }
    }

    pub fn site_pose(&self, name: &str) -> Result<RigidTransform, KinError> {
        Ok(self.site_state(name)?.pose)
    }

    /// Geometric Jacobian of a site: rows 0..3 linear, rows 3..6 angular
    /// velocity per unit joint rate, world frame. Columns follow the joint
    /// vector layout; joints off the site's kinematic path stay zero.
    pub fn site_jacobian(&self, name: &str) -> Result<DMatrix<f64>, KinError> {
        let idx = self
            .model
            .site_position(name)
            .ok_or_else(|| KinError::UnknownSite(name.to_owned()))?;
        Ok(self.site_jacobian_by_index(idx))
    }

    pub fn site_jacobian_by_index(&self, idx: usize) -> DMatrix<f64> {
        let site = &self.model.sites[idx];
        let p_site = self.site_state_by_index(idx).position;
        let mut jac = DMatrix::zeros(6, self.model.dof());
        let mut link = site.parent_link;
        while let Some(ji) = self.model.parent_joint[link] {
            let joint = &self.model.joints[ji];
            if let Some(slot) = self.model.actuated_slot[ji] {
                let axis = self.joint_axis_world[ji];
                match joint.kind {
                    JointKind::Revolute => {
                        let lever = p_site - self.joint_origin_world[ji];
                        let lin = axis.cross(&lever);
                        for r in 0..3 {
                            jac[(r, slot)] = lin[r];
                            jac[(r + 3, slot)] = axis[r];
                        }
                    }
                    JointKind::Prismatic => {
                        for r in 0..3 {
                            jac[(r, slot)] = axis[r];
                        }
                    }
                    JointKind::Fixed => unreachable!(),
                }
            }
            link = joint.parent;
        }
        jac
    }
}

fn joint_motion(joint: &Joint, value: f64) -> RigidTransform {
    match joint.kind {
        JointKind::Revolute => RigidTransform::new(
            UnitQuaternion::from_axis_angle(&joint.axis, value),
            Vector3::zeros(),
        ),
        JointKind::Prismatic => RigidTransform::from_translation(joint.axis.into_inner() * value),
        JointKind::Fixed => RigidTransform::identity(),
    }
}

/// Forward kinematics with the base link at `base`. Out-of-limit entries are
/// clamped and reported through [`FkSolution::clamped_joints`].
pub fn forward_kinematics_posed<'m>(
    model: &'m RobotModel,
    base: &RigidTransform,
    q: &JointVector,
) -> Result<FkSolution<'m>, KinError> {
    let (q, clamped) = model.clamp(q)?;
    let mut link_poses = vec![RigidTransform::identity(); model.links.len()];
    let mut joint_axis_world = vec![Vector3::zeros(); model.joints.len()];
    let mut joint_origin_world = vec![Vector3::zeros(); model.joints.len()];
    link_poses[model.base_link] = *base;
    for &link in &model.topo_links {
        let Some(ji) = model.parent_joint[link] else {
            continue;
        };
        let joint = &model.joints[ji];
        let pre = &link_poses[joint.parent] * &joint.origin;
        joint_axis_world[ji] = pre.transform_vector(&joint.axis);
        joint_origin_world[ji] = *pre.translation();
        let value = model.actuated_slot[ji].map_or(0.0, |slot| q[slot]);
        link_poses[link] = pre * joint_motion(joint, value);
    }
    Ok(FkSolution {
        model,
        link_poses,
        joint_axis_world,
        joint_origin_world,
        clamped,
    })
}

/// Forward kinematics with identity base pose.
pub fn forward_kinematics<'m>(
    model: &'m RobotModel,
    q: &JointVector,
) -> Result<FkSolution<'m>, KinError> {
    forward_kinematics_posed(model, &RigidTransform::identity(), q)
}

/// World poses of the named sites under configuration `q`.
pub fn site_poses(
    model: &RobotModel,
    q: &JointVector,
    site_names: &[impl AsRef<str>],
) -> Result<Vec<RigidTransform>, KinError> {
    let fk = forward_kinematics(model, q)?;
    site_names
        .iter()
        .map(|n| fk.site_pose(n.as_ref()))
        .collect()
}

/// 6 x dof geometric Jacobian of one site (identity base pose).
pub fn site_jacobian(
    model: &RobotModel,
    q: &JointVector,
    site_name: &str,
) -> Result<DMatrix<f64>, KinError> {
    forward_kinematics(model, q)?.site_jacobian(site_name)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::FRAC_PI_2;

    /// Two 0.5 m links along +x, both joints revolute about z.
    pub(crate) fn planar_two_link() -> RobotModel {
        let mut b = ModelBuilder::new("planar2");
        b.link("base").link("upper").link("lower");
        b.joint(
            "shoulder",
            "base",
            "upper",
            JointKind::Revolute,
            Vector3::z(),
            RigidTransform::identity(),
            Some((-3.0, 3.0)),
        );
        b.joint(
            "elbow",
            "upper",
            "lower",
            JointKind::Revolute,
            Vector3::z(),
            RigidTransform::from_xyz_rpy([0.5, 0.0, 0.0], [0.0; 3]),
            Some((-3.0, 3.0)),
        );
        b.site(
            "tip",
            "lower",
            RigidTransform::from_xyz_rpy([0.5, 0.0, 0.0], [0.0; 3]),
            SiteKind::Keypoint,
            Vector3::x(),
        );
        b.build().unwrap()
    }

    #[test]
    fn zero_dof_single_link() {
        let mut b = ModelBuilder::new("rock");
        b.link("base");
        let m = b.build().unwrap();
        assert_eq!(m.dof(), 0);
        let fk = forward_kinematics(&m, &JointVector::zeros(0)).unwrap();
        assert_eq!(fk.link_pose("base").unwrap(), &RigidTransform::identity());
    }

    #[test]
    fn planar_arm_trigonometry() {
        let m = planar_two_link();
        assert_eq!(m.dof(), 2);
        let fk = forward_kinematics(&m, &JointVector::new(vec![FRAC_PI_2, 0.0])).unwrap();
        let lower = fk.link_pose("lower").unwrap();
        assert_abs_diff_eq!(lower.translation().x, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(lower.translation().y, 0.5, epsilon = 1e-12);
        let tip = fk.site_state("tip").unwrap();
        assert_abs_diff_eq!(tip.position.x, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(tip.position.y, 1.0, epsilon = 1e-12);
        // Direction rotated with the chain.
        assert_abs_diff_eq!(tip.direction.y, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn prismatic_slide() {
        let mut b = ModelBuilder::new("slider");
        b.link("base").link("carriage");
        b.joint(
            "rail",
            "base",
            "carriage",
            JointKind::Prismatic,
            Vector3::z(),
            RigidTransform::identity(),
            Some((-1.0, 1.0)),
        );
        let m = b.build().unwrap();
        let fk = forward_kinematics(&m, &JointVector::new(vec![0.2])).unwrap();
        assert_abs_diff_eq!(fk.link_pose("carriage").unwrap().translation().z, 0.2, epsilon = 1e-15);
    }

    #[test]
    fn cycle_rejected() {
        let mut b = ModelBuilder::new("loop");
        b.link("a").link("b").link("c");
        b.joint("j1", "a", "b", JointKind::Fixed, Vector3::z(), RigidTransform::identity(), None);
        b.joint("j2", "b", "c", JointKind::Fixed, Vector3::z(), RigidTransform::identity(), None);
        b.joint("j3", "c", "a", JointKind::Fixed, Vector3::z(), RigidTransform::identity(), None);
        assert!(matches!(b.build(), Err(ModelError::NoRoot)));
    }

    #[test]
    fn child_of_own_ancestor_rejected() {
        let mut b = ModelBuilder::new("loop");
        b.link("root").link("a").link("b");
        b.joint("j0", "root", "a", JointKind::Fixed, Vector3::z(), RigidTransform::identity(), None);
        b.joint("j1", "a", "b", JointKind::Fixed, Vector3::z(), RigidTransform::identity(), None);
        b.joint("j2", "b", "a", JointKind::Fixed, Vector3::z(), RigidTransform::identity(), None);
        assert!(matches!(b.build(), Err(ModelError::MultipleParents { .. })));
    }

    #[test]
    fn missing_limits_rejected() {
        let mut b = ModelBuilder::new("m");
        b.link("a").link("b");
        b.joint("j", "a", "b", JointKind::Revolute, Vector3::z(), RigidTransform::identity(), None);
        assert!(matches!(b.build(), Err(ModelError::MissingLimits(_))));
    }

    #[test]
    fn non_unit_axis_rejected() {
        let mut b = ModelBuilder::new("m");
        b.link("a").link("b");
        b.joint(
            "j",
            "a",
            "b",
            JointKind::Revolute,
            Vector3::new(0.0, 0.0, 1.0 + 1e-6),
            RigidTransform::identity(),
            Some((-1.0, 1.0)),
        );
        assert!(matches!(b.build(), Err(ModelError::NonUnitAxis { .. })));
    }

    #[test]
    fn clamp_flags_and_idempotence() {
        let m = planar_two_link();
        let q = JointVector::new(vec![5.0, -4.0]);
        let (c1, touched) = m.clamp(&q).unwrap();
        assert_eq!(touched, vec![0, 1]);
        assert_eq!(c1.as_slice(), &[3.0, -3.0]);
        let (c2, touched2) = m.clamp(&c1).unwrap();
        assert_eq!(c1, c2);
        assert!(touched2.is_empty());
        let fk1 = forward_kinematics(&m, &q).unwrap();
        assert_eq!(fk1.clamped_joints(), &[0, 1]);
        let fk2 = forward_kinematics(&m, &c1).unwrap();
        // Bit-exact agreement between clamp-then-FK and FK-with-clamping.
        for ((_, a), (_, b)) in fk1.link_poses().zip(fk2.link_poses()) {
            assert_eq!(a.quaternion_wxyz(), b.quaternion_wxyz());
            assert_eq!(a.translation(), b.translation());
        }
    }

    #[test]
    fn dimension_mismatch() {
        let m = planar_two_link();
        assert!(matches!(
            forward_kinematics(&m, &JointVector::zeros(3)),
            Err(KinError::DimensionMismatch { expected: 2, got: 3 })
        ));
    }

    #[test]
    fn unknown_site_named() {
        let m = planar_two_link();
        let err = site_poses(&m, &JointVector::zeros(2), &["tip", "tipp"]).unwrap_err();
        match err {
            KinError::UnknownSite(name) => assert_eq!(name, "tipp"),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn base_site_zero_jacobian() {
        let mut b = ModelBuilder::new("m");
        b.link("base").link("tool");
        b.joint(
            "j",
            "base",
            "tool",
            JointKind::Revolute,
            Vector3::z(),
            RigidTransform::identity(),
            Some((-1.0, 1.0)),
        );
        b.site("anchor", "base", RigidTransform::identity(), SiteKind::Tcp, Vector3::z());
        let m = b.build().unwrap();
        let jac = site_jacobian(&m, &JointVector::zeros(1), "anchor").unwrap();
        assert_eq!(jac.abs().max(), 0.0);
    }

    #[test]
    fn single_revolute_screw_column() {
        let m = planar_two_link();
        let jac = site_jacobian(&m, &JointVector::zeros(2), "tip").unwrap();
        // Tip at (1,0,0); shoulder about z at origin: v = z x r = (0,1,0).
        assert_abs_diff_eq!(jac[(0, 0)], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(jac[(1, 0)], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(jac[(5, 0)], 1.0, epsilon = 1e-12);
        // Elbow at (0.5,0,0): lever 0.5 along x.
        assert_abs_diff_eq!(jac[(1, 1)], 0.5, epsilon = 1e-12);
    }

    #[test]
    fn posed_base_rotates_jacobian() {
        let m = planar_two_link();
        let base = RigidTransform::from_xyz_rpy([0.0, 0.0, 1.0], [0.0, 0.0, FRAC_PI_2]);
        let q = JointVector::zeros(2);
        let fk = forward_kinematics_posed(&m, &base, &q).unwrap();
        let tip = fk.site_state("tip").unwrap();
        assert_abs_diff_eq!(tip.position.y, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(tip.position.z, 1.0, epsilon = 1e-12);
        let jac = fk.site_jacobian("tip").unwrap();
        // Shoulder still about world z, lever now along +y: v = z x y = -x.
        assert_abs_diff_eq!(jac[(0, 0)], -1.0, epsilon = 1e-12);
    }
}
