//! Geometric predicates: visibility, reachability, stability and base clearance.

use super::{ArmSel, WorldError, WorldState};
use crate::geom::{Polygon, Pose, Vec2};

/// Erosion of support polygons for the stability test, meters.
pub const STABILITY_MARGIN: f64 = 0.02;

const PANEL_HALF_WIDTH: f64 = 0.015;

/// Obstacles closer than this to a reach target are the thing being touched.
pub const CONTACT_TOLERANCE: f64 = 0.03;

/// Thin rectangle around a segment, used for door panels.
pub fn segment_polygon(a: Vec2, b: Vec2, half_width: f64) -> Polygon {
    let d = b - a;
    let n = d.norm();
    let dir = if n > 0.0 { d * (1.0 / n) } else { Vec2::new(1.0, 0.0) };
    let side = dir.perp() * half_width;
    let along = dir * half_width;
    Polygon::new(vec![a - along - side, b + along - side, b + along + side, a - along + side])
}

impl WorldState {
    fn open_panels(&self) -> Vec<(f64, Polygon)> {
        self.containers
            .iter()
            .filter(|c| !c.is_closed())
            .filter_map(|c| {
                let (a, b) = c.door_at(c.joint)?;
                let h = self.furniture(&c.host).map_or(0.0, |f| f.height);
                Some((h, segment_polygon(a, b, PANEL_HALF_WIDTH)))
            })
            .collect()
    }

    fn walls(&self) -> Vec<(f64, Polygon)> {
        self.containers
            .iter()
            .flat_map(|c| {
                let h = self.furniture(&c.host).map_or(0.0, |f| f.height);
                c.walls.iter().map(move |w| (h, w.clone()))
            })
            .collect()
    }

    /// Polygons that block a line of sight towards `target`.
    pub fn view_occluders(&self, target: Vec2) -> Vec<Polygon> {
        let mut out: Vec<Polygon> = self
            .furniture
            .iter()
            .filter(|f| !f.footprint.contains(target))
            .map(|f| f.footprint.clone())
            .collect();
        out.extend(self.walls().into_iter().map(|(_, p)| p));
        out.extend(self.open_panels().into_iter().map(|(_, p)| p));
        out
    }

    /// Line of sight from the base position to a point.
    pub fn visible_point_from(&self, base: &Pose, target: Vec2) -> bool {
        let eye = base.xy();
        !self.view_occluders(target).iter().any(|p| p.segment_intersects(eye, target))
    }

    pub fn visible_from(&self, base: &Pose, object: &str) -> Result<bool, WorldError> {
        let o = self.try_object(object)?;
        if self.robot.holding(object).is_some() {
            return Ok(true);
        }
        if self.container_of(object).is_some_and(|c| !c.is_open()) {
            return Ok(false);
        }
        Ok(self.visible_point_from(base, o.pose.xy()))
    }

    /// Obstacles for an arm segment ending at `target`. Anything the target
    /// touches (a handle on its panel, an object on a furniture edge) is left out.
    pub fn reach_obstacles(&self, target: &Pose) -> Vec<Polygon> {
        let p = target.xy();
        let z = target.z + 1e-9;
        let mut out: Vec<Polygon> = self
            .furniture
            .iter()
            .filter(|f| f.height > z && f.footprint.distance_to_point(p) > CONTACT_TOLERANCE)
            .map(|f| f.footprint.clone())
            .collect();
        for (h, poly) in self.walls().into_iter().chain(self.open_panels()) {
            if h > z && poly.distance_to_point(p) > CONTACT_TOLERANCE {
                out.push(poly);
            }
        }
        for o in &self.objects {
            if self.robot.holding(&o.id).is_some() {
                continue;
            }
            let fp = o.world_footprint();
            if o.pose.z <= z && o.pose.z + o.height > z && fp.distance_to_point(p) > CONTACT_TOLERANCE {
                out.push(fp);
            }
        }
        out
    }

    /// Target lies in a container that is not open enough to reach into.
    pub fn enclosed(&self, target: &Pose) -> bool {
        self.containers.iter().any(|c| {
            let host_h = self.furniture(&c.host).map_or(0.0, |f| f.height);
            !c.is_open() && target.z < host_h && target.z >= c.z - 1e-9 && c.interior_now().contains(target.xy())
        })
    }

    pub fn reachable_from(&self, base: &Pose, target: &Pose, arm: ArmSel) -> bool {
        let r = &self.robot;
        if target.z < r.height_min || target.z > r.height_max || self.enclosed(target) {
            return false;
        }
        let obstacles = self.reach_obstacles(target);
        arm.arms().iter().all(|a| {
            let s = r.shoulder_at(base, *a);
            let d = s.dist(target.xy());
            d >= r.reach_min && d <= r.reach_max && !obstacles.iter().any(|p| p.segment_intersects(s, target.xy()))
        })
    }

    pub fn stable_at(&self, object: &str, pose: &Pose, support: &str) -> bool {
        match (self.object(object), self.support(support)) {
            (Some(o), Some(s)) => s.polygon.eroded_contains(o.cog_world(pose), STABILITY_MARGIN),
            _ => false,
        }
    }

    /// Footprints the robot base must keep clear of.
    pub fn base_obstacles(&self) -> Vec<Polygon> {
        let mut out: Vec<Polygon> = self.furniture.iter().map(|f| f.footprint.clone()).collect();
        for c in &self.containers {
            if !c.is_closed() && c.door_at(0.0).is_none() {
                out.push(c.interior_now());
            }
        }
        out.extend(self.open_panels().into_iter().map(|(_, p)| p));
        out
    }

    pub fn standable(&self, p: Vec2) -> bool {
        let r = self.robot.radius;
        self.in_room(p, r) && self.base_obstacles().iter().all(|o| o.distance_to_point(p) >= r)
    }

    /// Straight base path with the robot disc clear of all obstacles.
    pub fn base_path_clear(&self, a: Vec2, b: Vec2) -> bool {
        let r = self.robot.radius;
        self.in_room(a, r) && self.in_room(b, r) && self.base_obstacles().iter().all(|o| o.distance_to_segment(a, b) >= r)
    }

    /// Length of the shortest clear base route from `a` to `b` through the
    /// room's waypoints, if any.
    pub fn base_route(&self, a: Vec2, b: Vec2) -> Option<f64> {
        if self.base_path_clear(a, b) {
            return Some(a.dist(b));
        }
        let mut nodes = vec![a, b];
        nodes.extend(self.room.waypoints.iter().copied());
        let n = nodes.len();
        let mut dist = vec![f64::INFINITY; n];
        let mut done = vec![false; n];
        dist[0] = 0.0;
        loop {
            let u = (0..n).filter(|&i| !done[i] && dist[i].is_finite()).min_by(|&i, &j| dist[i].total_cmp(&dist[j]))?;
            if u == 1 {
                return Some(dist[1]);
            }
            done[u] = true;
            for v in 0..n {
                if !done[v] && self.base_path_clear(nodes[u], nodes[v]) {
                    dist[v] = dist[v].min(dist[u] + nodes[u].dist(nodes[v]));
                }
            }
        }
    }

    /// Copy of the world with one container fully open.
    pub fn with_open(&self, container: &str) -> WorldState {
        let mut w = self.clone();
        if let Some(range) = w.container(container).map(|c| c.range()) {
            w.set_joint(container, range);
        }
        w
    }
}
