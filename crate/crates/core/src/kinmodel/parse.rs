//! Robot-description parsing: a structural URDF-XML subset plus a `site`
//! extension tag, and an optional JSON sidecar for sites.
//!
//! Recognized tags: `robot`, `link`, `joint` (`origin`, `axis`, `limit`,
//! `parent`, `child`) and namespace-prefixed `site`. Everything else
//! (visuals, inertials, collisions, sensors, ...) is skipped with a recorded
//! warning. Stock robot descriptions carry no tactile or keypoint frames, so
//! sites arrive either as extension tags or through the sidecar file.

use nalgebra::Vector3;
use serde::Deserialize;
use thiserror::Error;

use super::{JointKind, ModelBuilder, ModelError, RobotModel, SiteKind};
use crate::transform::RigidTransform;
use crate::xmlmini::{self, Element, XmlError};

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("syntax error: {0}")]
    Syntax(#[from] XmlError),
    #[error("model error: {0}")]
    Model(#[from] ModelError),
    #[error("element `{element}` is missing attribute `{attr}`")]
    MissingAttr {
        element: String,
        attr: &'static str,
    },
    #[error("bad value `{value}` for `{what}`: {msg}")]
    BadValue {
        what: String,
        value: String,
        msg: String,
    },
    #[error("root element is `{0}`, expected `robot`")]
    NotARobot(String),
    #[error("sidecar site file: {0}")]
    Sidecar(String),
}

/// Parser output: the validated model plus warnings for skipped content.
#[derive(Debug)]
pub struct ParsedModel {
    pub model: RobotModel,
    pub warnings: Vec<String>,
}

fn require<'a>(el: &'a Element, attr: &'static str) -> Result<&'a str, ParseError> {
    el.attr(attr).ok_or_else(|| ParseError::MissingAttr {
        element: el.name.clone(),
        attr,
    })
}

fn parse_floats(what: &str, text: &str, n: usize) -> Result<Vec<f64>, ParseError> {
    let values: Result<Vec<f64>, _> = text.split_whitespace().map(str::parse::<f64>).collect();
    match values {
        Ok(v) if v.len() == n => Ok(v),
        Ok(v) => Err(ParseError::BadValue {
            what: what.to_owned(),
            value: text.to_owned(),
            msg: format!("expected {n} numbers, got {}", v.len()),
        }),
        Err(e) => Err(ParseError::BadValue {
            what: what.to_owned(),
            value: text.to_owned(),
            msg: e.to_string(),
        }),
    }
}

fn parse_origin(el: Option<&Element>) -> Result<RigidTransform, ParseError> {
    let Some(el) = el else {
        return Ok(RigidTransform::identity());
    };
    let xyz = match el.attr("xyz") {
        Some(text) => parse_floats("origin xyz", text, 3)?,
        None => vec![0.0; 3],
    };
    let rpy = match el.attr("rpy") {
        Some(text) => parse_floats("origin rpy", text, 3)?,
        None => vec![0.0; 3],
    };
    Ok(RigidTransform::from_xyz_rpy(
        [xyz[0], xyz[1], xyz[2]],
        [rpy[0], rpy[1], rpy[2]],
    ))
}

fn parse_site_kind(text: &str) -> Result<SiteKind, ParseError> {
    match text {
        "keypoint" => Ok(SiteKind::Keypoint),
        "tactile" => Ok(SiteKind::Tactile),
        "tcp" => Ok(SiteKind::Tcp),
        other => Err(ParseError::BadValue {
            what: "site kind".to_owned(),
            value: other.to_owned(),
            msg: "expected keypoint|tactile|tcp".to_owned(),
        }),
    }
}

/// Sidecar site record; same fields as the `site` extension tag.
#[derive(Debug, Deserialize)]
struct SidecarSite {
    name: String,
    parent: String,
    #[serde(default)]
    xyz: [f64; 3],
    #[serde(default)]
    rpy: [f64; 3],
    kind: String,
    #[serde(default = "default_dir")]
    dir: [f64; 3],
}

fn default_dir() -> [f64; 3] {
    [0.0, 0.0, 1.0]
}

/// Parse a robot-description document into a validated [`RobotModel`].
pub fn parse_robot_model(document: &str) -> Result<ParsedModel, ParseError> {
    parse_robot_model_with_sites(document, None)
}

/// Like [`parse_robot_model`], with sites appended from a JSON sidecar
/// (an array of `{name, parent, xyz, rpy, kind, dir}` records).
pub fn parse_robot_model_with_sites(
    document: &str,
    sidecar_sites: Option<&str>,
) -> Result<ParsedModel, ParseError> {
    let root = xmlmini::parse(document)?;
    if root.local_name() != "robot" {
        return Err(ParseError::NotARobot(root.name.clone()));
    }
    let name = root.attr("name").unwrap_or("robot");
    let mut builder = ModelBuilder::new(name);
    let mut warnings = Vec::new();

    for el in &root.children {
        match el.local_name() {
            "link" => {
                for sub in &el.children {
                    warnings.push(format!(
                        "ignored `{}` inside link `{}`",
                        sub.name,
                        el.attr("name").unwrap_or("?")
                    ));
                }
                builder.link(require(el, "name")?);
            }
            "joint" => parse_joint(el, &mut builder, &mut warnings)?,
            "site" => {
                let offset = RigidTransform::from_xyz_rpy(
                    {
                        let v = match el.attr("xyz") {
                            Some(t) => parse_floats("site xyz", t, 3)?,
                            None => vec![0.0; 3],
                        };
                        [v[0], v[1], v[2]]
                    },
                    {
                        let v = match el.attr("rpy") {
                            Some(t) => parse_floats("site rpy", t, 3)?,
                            None => vec![0.0; 3],
                        };
                        [v[0], v[1], v[2]]
                    },
                );
                let dir = match el.attr("dir") {
                    Some(t) => {
                        let v = parse_floats("site dir", t, 3)?;
                        Vector3::new(v[0], v[1], v[2])
                    }
                    None => Vector3::z(),
                };
                builder.site(
                    require(el, "name")?,
                    require(el, "parent")?,
                    offset,
                    parse_site_kind(require(el, "kind")?)?,
                    dir,
                );
            }
            other => warnings.push(format!("ignored top-level element `{other}`")),
        }
    }

    if let Some(json) = sidecar_sites {
        let records: Vec<SidecarSite> =
            serde_json::from_str(json).map_err(|e| ParseError::Sidecar(e.to_string()))?;
        for s in records {
            builder.site(
                &s.name,
                &s.parent,
                RigidTransform::from_xyz_rpy(s.xyz, s.rpy),
                parse_site_kind(&s.kind)?,
                Vector3::new(s.dir[0], s.dir[1], s.dir[2]),
            );
        }
    }

    Ok(ParsedModel {
        model: builder.build()?,
        warnings,
    })
}

fn parse_joint(
    el: &Element,
    builder: &mut ModelBuilder,
    warnings: &mut Vec<String>,
) -> Result<(), ParseError> {
    let name = require(el, "name")?;
    let kind = match require(el, "type")? {
        "revolute" => JointKind::Revolute,
        "prismatic" => JointKind::Prismatic,
        "fixed" => JointKind::Fixed,
        other => {
            return Err(ParseError::BadValue {
                what: format!("joint `{name}` type"),
                value: other.to_owned(),
                msg: "expected revolute|prismatic|fixed".to_owned(),
            })
        }
    };
    let parent = el
        .child("parent")
        .map(|p| require(p, "link"))
        .transpose()?
        .ok_or_else(|| ParseError::MissingAttr {
            element: format!("joint `{name}`"),
            attr: "parent",
        })?;
    let child = el
        .child("child")
        .map(|c| require(c, "link"))
        .transpose()?
        .ok_or_else(|| ParseError::MissingAttr {
            element: format!("joint `{name}`"),
            attr: "child",
        })?;
    let origin = parse_origin(el.child("origin"))?;
    let axis = match el.child("axis") {
        Some(a) => {
            let v = parse_floats("joint axis", require(a, "xyz")?, 3)?;
            Vector3::new(v[0], v[1], v[2])
        }
        None => Vector3::z(),
    };
    let limits = match el.child("limit") {
        Some(l) => {
            let lower = require(l, "lower")?;
            let upper = require(l, "upper")?;
            let parse = |what: &str, t: &str| -> Result<f64, ParseError> {
                t.parse::<f64>().map_err(|e| ParseError::BadValue {
                    what: what.to_owned(),
                    value: t.to_owned(),
                    msg: e.to_string(),
                })
            };
            Some((parse("limit lower", lower)?, parse("limit upper", upper)?))
        }
        None => None,
    };
    for sub in &el.children {
        if !matches!(sub.local_name(), "origin" | "axis" | "limit" | "parent" | "child") {
            warnings.push(format!("ignored `{}` inside joint `{name}`", sub.name));
        }
    }
    builder.joint(name, parent, child, kind, axis, origin, limits);
    Ok(())
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn fmt_vec(v: &[f64]) -> String {
    v.iter()
        .map(|x| format!("{x}"))
        .collect::<Vec<_>>()
        .join(" ")
}

/// Serialize a model back to the robot-description subset. Deterministic:
/// identical models produce identical bytes.
pub fn model_to_urdf(model: &RobotModel) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "<robot name=\"{}\" xmlns:dex=\"urn:dexpipe:site\">\n",
        xml_escape(model.name())
    ));
    for link in model.links() {
        out.push_str(&format!("  <link name=\"{}\"/>\n", xml_escape(&link.name)));
    }
    for joint in model.joints() {
        out.push_str(&format!(
            "  <joint name=\"{}\" type=\"{}\">\n",
            xml_escape(&joint.name),
            joint.kind.as_str()
        ));
        out.push_str(&format!(
            "    <parent link=\"{}\"/>\n",
            xml_escape(&model.links()[joint.parent].name)
        ));
        out.push_str(&format!(
            "    <child link=\"{}\"/>\n",
            xml_escape(&model.links()[joint.child].name)
        ));
        let (roll, pitch, yaw) = joint.origin.rotation().euler_angles();
        let t = joint.origin.translation();
        out.push_str(&format!(
            "    <origin xyz=\"{}\" rpy=\"{}\"/>\n",
            fmt_vec(&[t.x, t.y, t.z]),
            fmt_vec(&[roll, pitch, yaw])
        ));
        if joint.kind.is_actuated() {
            let a = joint.axis.into_inner();
            out.push_str(&format!("    <axis xyz=\"{}\"/>\n", fmt_vec(&[a.x, a.y, a.z])));
            if let Some((lo, hi)) = joint.limits {
                out.push_str(&format!("    <limit lower=\"{lo}\" upper=\"{hi}\"/>\n"));
            }
        }
        out.push_str("  </joint>\n");
    }
    for site in model.sites() {
        let (roll, pitch, yaw) = site.offset.rotation().euler_angles();
        let t = site.offset.translation();
        let d = site.local_direction.into_inner();
        out.push_str(&format!(
            "  <dex:site name=\"{}\" parent=\"{}\" xyz=\"{}\" rpy=\"{}\" kind=\"{}\" dir=\"{}\"/>\n",
            xml_escape(&site.name),
            xml_escape(&model.links()[site.parent_link].name),
            fmt_vec(&[t.x, t.y, t.z]),
            fmt_vec(&[roll, pitch, yaw]),
            site.kind.as_str(),
            fmt_vec(&[d.x, d.y, d.z])
        ));
    }
    out.push_str("</robot>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    const PLANAR_ARM: &str = r#"<?xml version="1.0"?>
        <robot name="planar2" xmlns:dex="urn:dexpipe:site">
          <link name="base"/>
          <link name="upper"><visual><geometry/></visual></link>
          <link name="lower"/>
          <joint name="shoulder" type="revolute">
            <parent link="base"/><child link="upper"/>
            <origin xyz="0 0 0" rpy="0 0 0"/>
            <axis xyz="0 0 1"/>
            <limit lower="-3" upper="3"/>
          </joint>
          <joint name="elbow" type="revolute">
            <parent link="upper"/><child link="lower"/>
            <origin xyz="0.5 0 0"/>
            <axis xyz="0 0 1"/>
            <limit lower="-2.5" upper="2.5"/>
          </joint>
          <dex:site name="tip" parent="lower" xyz="0.5 0 0" kind="keypoint" dir="1 0 0"/>
        </robot>"#;

    #[test]
    fn planar_fixture_field_by_field() {
        let parsed = parse_robot_model(PLANAR_ARM).unwrap();
        let m = &parsed.model;
        assert_eq!(m.name(), "planar2");
        assert_eq!(m.dof(), 2);
        assert_eq!(m.joint_limits(), vec![(-3.0, 3.0), (-2.5, 2.5)]);
        assert_eq!(m.base_link_name(), "base");
        let elbow = &m.joints()[1];
        assert_eq!(elbow.kind, JointKind::Revolute);
        assert_abs_diff_eq!(elbow.origin.translation().x, 0.5, epsilon = 0.0);
        let site = m.site("tip").unwrap();
        assert_eq!(site.kind, SiteKind::Keypoint);
        assert_abs_diff_eq!(site.offset.translation().x, 0.5, epsilon = 0.0);
        // The visual block was skipped with a warning.
        assert!(parsed.warnings.iter().any(|w| w.contains("visual")));
    }

    #[test]
    fn single_link_document() {
        let parsed = parse_robot_model(r#"<robot name="rock"><link name="only"/></robot>"#).unwrap();
        assert_eq!(parsed.model.dof(), 0);
        assert!(parsed.warnings.is_empty());
    }

    #[test]
    fn ancestor_cycle_is_model_error() {
        let doc = r#"<robot name="bad">
            <link name="a"/><link name="b"/>
            <joint name="j1" type="fixed"><parent link="a"/><child link="b"/></joint>
            <joint name="j2" type="fixed"><parent link="b"/><child link="a"/></joint>
        </robot>"#;
        assert!(matches!(parse_robot_model(doc), Err(ParseError::Model(_))));
    }

    #[test]
    fn malformed_document_is_syntax_error() {
        assert!(matches!(
            parse_robot_model("<robot name=\"x\"><link name=\"a\"></robot>"),
            Err(ParseError::Syntax(_))
        ));
    }

    #[test]
    fn sidecar_sites_appended() {
        let sidecar = r#"[
            {"name": "pad", "parent": "lower", "xyz": [0.4, 0.0, 0.01], "rpy": [0,0,0],
             "kind": "tactile", "dir": [0, 0, 1]}
        ]"#;
        let parsed = parse_robot_model_with_sites(PLANAR_ARM, Some(sidecar)).unwrap();
        assert_eq!(parsed.model.sites().len(), 2);
        assert_eq!(parsed.model.tactile_site_names(), vec!["pad"]);
    }

    #[test]
    fn writer_round_trip() {
        let parsed = parse_robot_model(PLANAR_ARM).unwrap();
        let emitted = model_to_urdf(&parsed.model);
        let back = parse_robot_model(&emitted).unwrap().model;
        assert_eq!(back.dof(), 2);
        assert_eq!(back.joint_limits(), parsed.model.joint_limits());
        let a = parsed.model.site("tip").unwrap();
        let b = back.site("tip").unwrap();
        assert_abs_diff_eq!(
            (a.offset.translation() - b.offset.translation()).norm(),
            0.0,
            epsilon = 1e-12
        );
        // Deterministic emission.
        assert_eq!(emitted, model_to_urdf(&back));
    }
}
