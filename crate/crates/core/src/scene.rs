//! Scenes: a halfspace set plus the tree that combines them.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{CsgError, Result};
use crate::geometry::{Aabb, Halfspace, Shape, Vec3};
use crate::tree::CsgNode;
use crate::MAX_HALFSPACES;

/// SDF value of the `Empty` literal. `Universe` evaluates to its negation.
pub const LARGE: f64 = 1e30;

/// Reference metrics recorded alongside a hand-authored scene.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetMetrics {
    pub size: usize,
    pub proximity: f64,
}

#[derive(Debug, Clone)]
pub struct Scene {
    pub name: String,
    halfspaces: Vec<Halfspace>,
    /// Dense id -> position lookup.
    index_of: Vec<Option<usize>>,
    pub root: CsgNode,
    pub target: Option<TargetMetrics>,
}

impl PartialEq for Scene {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name && self.halfspaces == other.halfspaces && self.root == other.root
    }
}

impl Scene {
    pub fn new(name: impl Into<String>, halfspaces: Vec<Halfspace>, root: CsgNode) -> Result<Scene> {
        if halfspaces.len() > MAX_HALFSPACES {
            return Err(CsgError::TooManyHalfspaces(halfspaces.len()));
        }
        let max_id = halfspaces.iter().map(|h| h.id as usize).max().unwrap_or(0);
        let mut index_of = vec![None; max_id + 1];
        for (i, h) in halfspaces.iter().enumerate() {
            h.shape.validate()?;
            let slot = &mut index_of[h.id as usize];
            if slot.is_some() {
                return Err(CsgError::DuplicateHalfspace(h.id));
            }
            *slot = Some(i);
        }
        let scene = Scene {
            name: name.into(),
            halfspaces,
            index_of,
            root,
            target: None,
        };
        scene.check_tree(&scene.root)?;
        Ok(scene)
    }

    pub fn with_target(mut self, size: usize, proximity: f64) -> Self {
        self.target = Some(TargetMetrics { size, proximity });
        self
    }

    /// Same halfspaces, different tree.
    pub fn with_root(&self, root: CsgNode) -> Result<Scene> {
        self.check_tree(&root)?;
        Ok(Scene {
            root,
            ..self.clone()
        })
    }

    pub fn halfspaces(&self) -> &[Halfspace] {
        &self.halfspaces
    }

    pub fn halfspace(&self, id: u32) -> Option<&Halfspace> {
        self.index(id).map(|i| &self.halfspaces[i])
    }

    /// Position of halfspace `id` in `halfspaces()`; sign vectors use this order.
    #[inline]
    pub fn index(&self, id: u32) -> Option<usize> {
        self.index_of.get(id as usize).copied().flatten()
    }

    pub fn ids(&self) -> Vec<u32> {
        self.halfspaces.iter().map(|h| h.id).collect()
    }

    pub fn check_tree(&self, node: &CsgNode) -> Result<()> {
        for id in node.halfspace_ids() {
            if self.index(id).is_none() {
                return Err(CsgError::UnknownHalfspace(id));
            }
        }
        Ok(())
    }

    /// Union of all halfspace boxes.
    pub fn aabb(&self) -> Aabb {
        self.halfspaces.iter().fold(Aabb::empty(), |acc, h| acc.union(&h.aabb()))
    }

    /// Union of the boxes of the given halfspace ids.
    pub fn aabb_of_ids<'a, I: IntoIterator<Item = &'a u32>>(&self, ids: I) -> Aabb {
        ids.into_iter()
            .filter_map(|id| self.halfspace(*id))
            .fold(Aabb::empty(), |acc, h| acc.union(&h.aabb()))
    }

    /// SDF of `node` at `p`. Fails on unresolved halfspace ids.
    pub fn eval_sdf(&self, node: &CsgNode, p: &Vec3) -> Result<f64> {
        self.check_tree(node)?;
        Ok(self.eval(node, p))
    }

    /// Unchecked evaluation; `node` must be valid in this scene.
    pub fn eval(&self, node: &CsgNode, p: &Vec3) -> f64 {
        match node {
            CsgNode::Leaf(id) => self.halfspaces[self.index(*id).expect("leaf id resolves")].sdf(p),
            CsgNode::Empty => LARGE,
            CsgNode::Universe => -LARGE,
            CsgNode::Union(l, r) => self.eval(l, p).min(self.eval(r, p)),
            CsgNode::Intersection(l, r) => self.eval(l, p).max(self.eval(r, p)),
            CsgNode::Complement(c) => -self.eval(c, p),
            CsgNode::Difference(l, r) => self.eval(l, p).max(-self.eval(r, p)),
        }
    }

    /// Evaluation from precomputed halfspace values indexed by position.
    pub fn eval_with(&self, node: &CsgNode, values: &[f64]) -> f64 {
        match node {
            CsgNode::Leaf(id) => values[self.index(*id).expect("leaf id resolves")],
            CsgNode::Empty => LARGE,
            CsgNode::Universe => -LARGE,
            CsgNode::Union(l, r) => self.eval_with(l, values).min(self.eval_with(r, values)),
            CsgNode::Intersection(l, r) => self.eval_with(l, values).max(self.eval_with(r, values)),
            CsgNode::Complement(c) => -self.eval_with(c, values),
            CsgNode::Difference(l, r) => self.eval_with(l, values).max(-self.eval_with(r, values)),
        }
    }

    /// Conservative box of the points where `node` is non-positive.
    pub fn node_aabb(&self, node: &CsgNode) -> Aabb {
        match node {
            CsgNode::Leaf(id) => self.halfspace(*id).map(|h| h.aabb()).unwrap_or_else(Aabb::empty),
            CsgNode::Empty => Aabb::empty(),
            CsgNode::Universe | CsgNode::Complement(_) => self.aabb(),
            CsgNode::Union(l, r) => self.node_aabb(l).union(&self.node_aabb(r)),
            CsgNode::Intersection(l, r) => self.node_aabb(l).intersection(&self.node_aabb(r)),
            CsgNode::Difference(l, _) => self.node_aabb(l),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&SceneJson::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<Scene> {
        let dto: SceneJson = serde_json::from_str(text)?;
        dto.try_into()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Scene> {
        Scene::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct SceneJson {
    name: String,
    halfspaces: Vec<HalfspaceJson>,
    tree: TreeJson,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    target: Option<TargetMetrics>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
enum HalfspaceJson {
    Sphere {
        id: u32,
        center: [f64; 3],
        radius: f64,
    },
    Box {
        id: u32,
        center: [f64; 3],
        half_extents: [f64; 3],
        #[serde(default = "identity_rows")]
        rotation: [[f64; 3]; 3],
    },
    Cylinder {
        id: u32,
        center: [f64; 3],
        axis: [f64; 3],
        radius: f64,
        half_height: f64,
    },
}

fn identity_rows() -> [[f64; 3]; 3] {
    [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]
}

#[derive(Debug, Serialize, Deserialize)]
struct TreeJson {
    op: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    hs: Option<u32>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    args: Vec<TreeJson>,
}

fn arr(v: &Vec3) -> [f64; 3] {
    [v.x, v.y, v.z]
}

impl From<&Halfspace> for HalfspaceJson {
    fn from(h: &Halfspace) -> Self {
        match &h.shape {
            Shape::Sphere { center, radius } => HalfspaceJson::Sphere {
                id: h.id,
                center: arr(center),
                radius: *radius,
            },
            Shape::Box {
                center,
                half_extents,
                rotation,
            } => HalfspaceJson::Box {
                id: h.id,
                center: arr(center),
                half_extents: arr(half_extents),
                rotation: [0, 1, 2].map(|r| [0, 1, 2].map(|c| rotation[(r, c)])),
            },
            Shape::Cylinder {
                center,
                axis,
                radius,
                half_height,
            } => HalfspaceJson::Cylinder {
                id: h.id,
                center: arr(center),
                axis: arr(axis),
                radius: *radius,
                half_height: *half_height,
            },
        }
    }
}

impl From<HalfspaceJson> for Halfspace {
    fn from(h: HalfspaceJson) -> Self {
        match h {
            HalfspaceJson::Sphere { id, center, radius } => Halfspace::new(
                id,
                Shape::Sphere {
                    center: center.into(),
                    radius,
                },
            ),
            HalfspaceJson::Box {
                id,
                center,
                half_extents,
                rotation,
            } => Halfspace::new(
                id,
                Shape::Box {
                    center: center.into(),
                    half_extents: half_extents.into(),
                    rotation: nalgebra::Matrix3::from_fn(|r, c| rotation[r][c]),
                },
            ),
            HalfspaceJson::Cylinder {
                id,
                center,
                axis,
                radius,
                half_height,
            } => Halfspace::new(
                id,
                Shape::Cylinder {
                    center: center.into(),
                    axis: axis.into(),
                    radius,
                    half_height,
                },
            ),
        }
    }
}

impl From<&CsgNode> for TreeJson {
    fn from(n: &CsgNode) -> Self {
        let (op, hs) = match n {
            CsgNode::Leaf(id) => ("leaf", Some(*id)),
            CsgNode::Empty => ("empty", None),
            CsgNode::Universe => ("universe", None),
            CsgNode::Union(..) => ("union", None),
            CsgNode::Intersection(..) => ("inter", None),
            CsgNode::Complement(_) => ("comp", None),
            CsgNode::Difference(..) => ("diff", None),
        };
        TreeJson {
            op: op.to_string(),
            hs,
            args: n.children().into_iter().map(TreeJson::from).collect(),
        }
    }
}

impl TryFrom<TreeJson> for CsgNode {
    type Error = CsgError;

    fn try_from(t: TreeJson) -> Result<Self> {
        let arity = |n: usize| -> Result<()> {
            if t.args.len() == n {
                Ok(())
            } else {
                Err(CsgError::Parse(format!("op {:?} expects {n} args, got {}", t.op, t.args.len())))
            }
        };
        match t.op.as_str() {
            "leaf" => {
                arity(0)?;
                t.hs.map(CsgNode::Leaf)
                    .ok_or_else(|| CsgError::Parse("leaf without \"hs\"".into()))
            }
            "empty" => arity(0).map(|_| CsgNode::Empty),
            "universe" => arity(0).map(|_| CsgNode::Universe),
            "comp" => {
                arity(1)?;
                let [c]: [TreeJson; 1] = t.args.try_into().expect("arity checked");
                Ok(CsgNode::comp(c.try_into()?))
            }
            "union" | "inter" | "diff" => {
                arity(2)?;
                let op = t.op.clone();
                let [l, r]: [TreeJson; 2] = t.args.try_into().expect("arity checked");
                let (l, r) = (CsgNode::try_from(l)?, CsgNode::try_from(r)?);
                Ok(match op.as_str() {
                    "union" => CsgNode::union(l, r),
                    "inter" => CsgNode::inter(l, r),
                    _ => CsgNode::diff(l, r),
                })
            }
            other => Err(CsgError::Parse(format!("unknown op {other:?}"))),
        }
    }
}

impl From<&Scene> for SceneJson {
    fn from(s: &Scene) -> Self {
        SceneJson {
            name: s.name.clone(),
            halfspaces: s.halfspaces.iter().map(HalfspaceJson::from).collect(),
            tree: TreeJson::from(&s.root),
            target: s.target,
        }
    }
}

impl TryFrom<SceneJson> for Scene {
    type Error = CsgError;

    fn try_from(s: SceneJson) -> Result<Self> {
        let root = CsgNode::try_from(s.tree)?;
        let mut scene = Scene::new(s.name, s.halfspaces.into_iter().map(Halfspace::from).collect(), root)?;
        scene.target = s.target;
        Ok(scene)
    }
}

/// Serialises a bare tree in the scene JSON tree format.
pub fn tree_to_json(node: &CsgNode) -> Result<String> {
    Ok(serde_json::to_string(&TreeJson::from(node))?)
}

pub fn tree_from_json(text: &str) -> Result<CsgNode> {
    let t: TreeJson = serde_json::from_str(text)?;
    t.try_into()
}
