//! LiDAR point-cloud preparation: box-frustum cropping through a camera
//! calibration, foreground extraction by range clustering, and resampling
//! to a fixed point budget.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Default near-range cull in meters for [`crop_to_bbox`].
pub const DEFAULT_NEAR_LIMIT: f64 = 5.0;
/// Default inter-point range gap that starts a new cluster.
pub const DEFAULT_CLUSTER_GAP: f64 = 0.25;
/// Default detection confidence used to weight clusters.
pub const DEFAULT_CONFIDENCE: f64 = 1.0;
/// Default resampling target size.
pub const DEFAULT_RESAMPLE_TARGET: usize = 512;
/// Default neighbor count for midpoint synthesis when upsampling.
pub const DEFAULT_RESAMPLE_NEIGHBORS: usize = 4;

/// One LiDAR return: position in the sensor frame plus reflectance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point<T> {
    pub x: T,
    pub y: T,
    pub z: T,
    pub reflectance: T,
}

impl<T: Real> Point<T> {
    pub fn new(x: T, y: T, z: T, reflectance: T) -> Self {
        Point { x, y, z, reflectance }
    }

    /// Euclidean distance from the sensor origin.
    pub fn range(&self) -> T {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    /// Euclidean distance to another point.
    pub fn distance(&self, other: &Point<T>) -> T {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        let dz = self.z - other.z;
        (dx * dx + dy * dy + dz * dz).sqrt()
    }

    fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite() && self.reflectance.is_finite()
    }
}

/// A set of LiDAR returns in sensor coordinates.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PointCloud<T> {
    pub points: Vec<Point<T>>,
}

impl<T: Real> PointCloud<T> {
    pub fn new(points: Vec<Point<T>>) -> Self {
        PointCloud { points }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    fn check_finite(&self) -> Result<()> {
        if let Some(i) = self.points.iter().position(|p| !p.is_finite()) {
            return Err(Error::data(format!(
                "point {i} has a non-finite coordinate"
            )));
        }
        Ok(())
    }
}

/// Camera calibration: rectified projection, rectification rotation, and
/// the rigid sensor-to-camera transform.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationSet<T> {
    /// 3x4 rectified projection matrix.
    p_rect: [[T; 4]; 3],
    /// 4x4 homogeneous rectification rotation.
    r_rect: [[T; 4]; 4],
    /// 4x4 homogeneous sensor-to-camera rigid transform.
    t_lidar_cam: [[T; 4]; 4],
}

impl<T: Real> CalibrationSet<T> {
    /// Assemble a calibration from the raw matrix shapes calibration files
    /// carry: a 3x4 projection, a 3x3 rectification rotation, and a 3x4
    /// rigid transform. The rotation parts must be orthonormal.
    pub fn new(
        p_rect: [[T; 4]; 3],
        r_rect: [[T; 3]; 3],
        t_lidar_cam: [[T; 4]; 3],
    ) -> Result<Self> {
        let all_finite = p_rect.iter().flatten().all(|v| v.is_finite())
            && r_rect.iter().flatten().all(|v| v.is_finite())
            && t_lidar_cam.iter().flatten().all(|v| v.is_finite());
        if !all_finite {
            return Err(Error::data("calibration matrix entry is non-finite"));
        }
        let rotation = [
            [t_lidar_cam[0][0], t_lidar_cam[0][1], t_lidar_cam[0][2]],
            [t_lidar_cam[1][0], t_lidar_cam[1][1], t_lidar_cam[1][2]],
            [t_lidar_cam[2][0], t_lidar_cam[2][1], t_lidar_cam[2][2]],
        ];
        check_orthonormal(&rotation, "sensor-to-camera transform")?;
        check_orthonormal(&r_rect, "rectification rotation")?;

        let mut r4 = [[T::zero(); 4]; 4];
        for (i, row) in r_rect.iter().enumerate() {
            r4[i][..3].copy_from_slice(row);
        }
        r4[3][3] = T::one();

        let mut t4 = [[T::zero(); 4]; 4];
        for (i, row) in t_lidar_cam.iter().enumerate() {
            t4[i] = *row;
        }
        t4[3][3] = T::one();

        Ok(CalibrationSet {
            p_rect,
            r_rect: r4,
            t_lidar_cam: t4,
        })
    }

    pub fn p_rect(&self) -> &[[T; 4]; 3] {
        &self.p_rect
    }

    pub fn r_rect(&self) -> &[[T; 4]; 4] {
        &self.r_rect
    }

    pub fn t_lidar_cam(&self) -> &[[T; 4]; 4] {
        &self.t_lidar_cam
    }

    /// Project one sensor-frame point. Returns `None` when the point sits
    /// at or behind the camera plane (non-positive depth), otherwise the
    /// `(u, v)` pixel position after perspective division.
    pub fn project(&self, point: &Point<T>) -> Option<(T, T)> {
        let hom = [point.x, point.y, point.z, T::one()];
        let cam = mat4_mul_vec(&self.t_lidar_cam, &hom);
        let rect = mat4_mul_vec(&self.r_rect, &cam);
        let img = [
            dot4(&self.p_rect[0], &rect),
            dot4(&self.p_rect[1], &rect),
            dot4(&self.p_rect[2], &rect),
        ];
        if img[2] <= T::zero() {
            return None;
        }
        Some((img[0] / img[2], img[1] / img[2]))
    }
}

fn check_orthonormal<T: Real>(r: &[[T; 3]; 3], what: &str) -> Result<()> {
    let tol = T::cast(1e-6).max(T::cast(100.0) * T::epsilon());
    for i in 0..3 {
        for j in 0..3 {
            // (R^T R)[i][j] as a dot product of columns i and j.
            let mut acc = T::zero();
            for row in r {
                acc += row[i] * row[j];
            }
            let expect = if i == j { T::one() } else { T::zero() };
            if (acc - expect).abs() > tol {
                return Err(Error::data(format!(
                    "{what} rotation block is not orthonormal: (R'R)[{i}][{j}] = {acc}"
                )));
            }
        }
    }
    Ok(())
}

fn mat4_mul_vec<T: Real>(m: &[[T; 4]; 4], v: &[T; 4]) -> [T; 4] {
    [
        dot4(&m[0], v),
        dot4(&m[1], v),
        dot4(&m[2], v),
        dot4(&m[3], v),
    ]
}

fn dot4<T: Real>(row: &[T; 4], v: &[T; 4]) -> T {
    row[0] * v[0] + row[1] * v[1] + row[2] * v[2] + row[3] * v[3]
}

/// Axis-aligned image-plane box in pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BBox2D<T> {
    pub x_min: T,
    pub y_min: T,
    pub x_max: T,
    pub y_max: T,
}

impl<T: Real> BBox2D<T> {
    pub fn new(x_min: T, y_min: T, x_max: T, y_max: T) -> Result<Self> {
        let all_finite =
            x_min.is_finite() && y_min.is_finite() && x_max.is_finite() && y_max.is_finite();
        if !all_finite {
            return Err(Error::parameter("box coordinate is non-finite"));
        }
        if x_min > x_max || y_min > y_max {
            return Err(Error::parameter(format!(
                "box corners are inverted: [{x_min}, {y_min}, {x_max}, {y_max}]"
            )));
        }
        Ok(BBox2D {
            x_min,
            y_min,
            x_max,
            y_max,
        })
    }
}

/// Pixel positions of every cloud point, `None` for points at or behind
/// the camera plane.
pub fn project_to_image<T: Real>(
    cloud: &PointCloud<T>,
    calib: &CalibrationSet<T>,
) -> Result<Vec<Option<(T, T)>>> {
    cloud.check_finite()?;
    Ok(cloud.points.iter().map(|p| calib.project(p)).collect())
}

/// Keep the sensor-frame points whose image projections fall inside `bbox`.
///
/// Points closer than `near_limit` along the sensor's forward (`x`) axis
/// are culled first; points behind the camera never match. The box check
/// allows one extra pixel past the max corner only:
/// `x_min <= u <= x_max + 1` and `y_min <= v <= y_max + 1`.
pub fn crop_to_bbox<T: Real>(
    cloud: &PointCloud<T>,
    calib: &CalibrationSet<T>,
    bbox: &BBox2D<T>,
    near_limit: T,
) -> Result<PointCloud<T>> {
    cloud.check_finite()?;
    if !near_limit.is_finite() {
        return Err(Error::parameter("near-range cull limit must be finite"));
    }
    let one = T::one();
    let kept = cloud
        .points
        .iter()
        .filter(|p| p.x >= near_limit)
        .filter(|p| match calib.project(p) {
            None => false,
            Some((u, v)) => {
                u >= bbox.x_min
                    && u <= bbox.x_max + one
                    && v >= bbox.y_min
                    && v <= bbox.y_max + one
            }
        })
        .copied()
        .collect();
    Ok(PointCloud::new(kept))
}

/// Split the cloud into clusters by sorted range gaps and return the one
/// that best balances size against nearness.
///
/// Points are ordered by distance from the sensor origin (ties keep input
/// order); a new cluster starts whenever consecutive ranges differ by more
/// than `gap`. Cluster `k` of `cl` (nearest first) gets weight
/// `count_k * (confidence - k / cl)`; the earliest maximum wins, and its
/// points are returned in range order.
pub fn cluster_foreground<T: Real>(
    cloud: &PointCloud<T>,
    gap: T,
    confidence: T,
) -> Result<PointCloud<T>> {
    cloud.check_finite()?;
    if cloud.is_empty() {
        return Err(Error::data("cannot cluster an empty cloud"));
    }
    if !gap.is_finite() || gap <= T::zero() {
        return Err(Error::parameter(format!(
            "cluster gap must be positive and finite, got {gap}"
        )));
    }
    if !confidence.is_finite() || confidence <= T::zero() || confidence > T::one() {
        return Err(Error::parameter(format!(
            "confidence must lie in (0, 1], got {confidence}"
        )));
    }

    let mut order: Vec<usize> = (0..cloud.len()).collect();
    let ranges: Vec<T> = cloud.points.iter().map(Point::range).collect();
    order.sort_by(|&a, &b| ranges[a].partial_cmp(&ranges[b]).expect("finite ranges"));

    // Cluster extents as index spans over `order`.
    let mut spans: Vec<(usize, usize)> = Vec::new();
    let mut start = 0usize;
    for i in 1..order.len() {
        if ranges[order[i]] - ranges[order[i - 1]] > gap {
            spans.push((start, i));
            start = i;
        }
    }
    spans.push((start, order.len()));

    let cl = T::from_usize(spans.len()).expect("cluster count fits scalar");
    let mut best = 0usize;
    let mut best_weight = T::neg_infinity();
    for (k, &(s, e)) in spans.iter().enumerate() {
        let count = T::from_usize(e - s).expect("count fits scalar");
        let depth_discount = T::from_usize(k).expect("index fits scalar") / cl;
        let weight = count * (confidence - depth_discount);
        if weight > best_weight {
            best_weight = weight;
            best = k;
        }
    }

    let (s, e) = spans[best];
    let points = order[s..e].iter().map(|&i| cloud.points[i]).collect();
    Ok(PointCloud::new(points))
}

/// Return a cloud with exactly `target` points.
///
/// * Larger clouds keep a uniformly chosen subset, in original order.
/// * Smaller clouds are padded with synthetic points: each is the midpoint
///   of a uniformly chosen original point and one of its `neighbors`
///   nearest original points (itself for a single-point cloud), with the
///   reflectance averaged. Synthetic points are appended after the
///   originals.
/// * A cloud already at `target` is returned unchanged.
///
/// The same `seed` always reproduces the same output.
pub fn resample<T: Real>(
    cloud: &PointCloud<T>,
    target: usize,
    neighbors: usize,
    seed: u64,
) -> Result<PointCloud<T>> {
    cloud.check_finite()?;
    if cloud.is_empty() {
        return Err(Error::data("cannot resample an empty cloud"));
    }
    if target == 0 {
        return Err(Error::parameter("resample target must be at least 1"));
    }
    if neighbors == 0 {
        return Err(Error::parameter("neighbor count must be at least 1"));
    }

    let n = cloud.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    if n == target {
        return Ok(cloud.clone());
    }

    if n > target {
        let mut keep = rand::seq::index::sample(&mut rng, n, target).into_vec();
        keep.sort_unstable();
        let points = keep.iter().map(|&i| cloud.points[i]).collect();
        return Ok(PointCloud::new(points));
    }

    // Upsample: originals first, then synthesized midpoints.
    let mut points = cloud.points.clone();
    let mut neighbor_cache: HashMap<usize, Vec<usize>> = HashMap::new();
    for _ in n..target {
        let anchor = rng.random_range(0..n);
        let candidates = neighbor_cache
            .entry(anchor)
            .or_insert_with(|| nearest_neighbors(&cloud.points, anchor, neighbors));
        let mate = candidates[rng.random_range(0..candidates.len())];
        let a = cloud.points[anchor];
        let b = cloud.points[mate];
        let half = T::cast(0.5);
        points.push(Point::new(
            (a.x + b.x) * half,
            (a.y + b.y) * half,
            (a.z + b.z) * half,
            (a.reflectance + b.reflectance) * half,
        ));
    }
    Ok(PointCloud::new(points))
}

/// Indices of the `k` nearest points to `anchor` (excluding itself); ties
/// prefer the lower index. A single-point cloud returns the anchor itself.
fn nearest_neighbors<T: Real>(points: &[Point<T>], anchor: usize, k: usize) -> Vec<usize> {
    if points.len() == 1 {
        return vec![anchor];
    }
    let mut by_distance: Vec<(T, usize)> = points
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != anchor)
        .map(|(i, p)| (points[anchor].distance(p), i))
        .collect();
    by_distance.sort_by(|a, b| {
        a.0.partial_cmp(&b.0)
            .expect("finite distances")
            .then(a.1.cmp(&b.1))
    });
    by_distance.truncate(k.min(by_distance.len()));
    by_distance.into_iter().map(|(_, i)| i).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Camera along the sensor's +x axis: right = -y, down = -z,
    /// forward = +x; focal length 700, principal point (600, 200).
    fn test_calibration() -> CalibrationSet<f64> {
        let p = [
            [700.0, 0.0, 600.0, 0.0],
            [0.0, 700.0, 200.0, 0.0],
            [0.0, 0.0, 1.0, 0.0],
        ];
        let r = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        let t = [
            [0.0, -1.0, 0.0, 0.0],
            [0.0, 0.0, -1.0, 0.0],
            [1.0, 0.0, 0.0, 0.0],
        ];
        CalibrationSet::new(p, r, t).unwrap()
    }

    fn pt(x: f64, y: f64, z: f64) -> Point<f64> {
        Point::new(x, y, z, 0.3)
    }

    #[test]
    fn forward_points_project_through_the_pinhole_model() {
        let calib = test_calibration();
        // Straight ahead: lands on the principal point.
        assert_eq!(calib.project(&pt(10.0, 0.0, 0.0)), Some((600.0, 200.0)));
        // One meter left (+y) at 10 m: u = 600 - 700/10.
        let (u, v) = calib.project(&pt(10.0, 1.0, 0.0)).unwrap();
        assert!((u - 530.0).abs() < 1e-12);
        assert!((v - 200.0).abs() < 1e-12);
        // One meter up (+z) at 5 m: v = 200 - 700/5.
        let (u, v) = calib.project(&pt(5.0, 0.0, 1.0)).unwrap();
        assert!((u - 600.0).abs() < 1e-12);
        assert!((v - 60.0).abs() < 1e-12);
    }

    #[test]
    fn points_behind_the_camera_do_not_project() {
        let calib = test_calibration();
        assert_eq!(calib.project(&pt(-4.0, 0.0, 0.0)), None);
        assert_eq!(calib.project(&pt(0.0, 2.0, 0.0)), None);
    }

    #[test]
    fn crop_applies_box_margins_and_near_cull() {
        let calib = test_calibration();
        // At 10 m, one pixel is 1/70 m. Pick points that straddle the box.
        let inside = pt(10.0, 0.0, 0.0);
        let near = pt(2.0, 0.0, 0.0); // would project inside, but too close
        let behind = pt(-10.0, 0.0, 0.0);
        // Box right edge at u = 610 allows one extra pixel: u ~ 610.9 stays,
        // u ~ 611.1 falls out.
        let on_margin = pt(10.0, -10.9 / 70.0, 0.0); // u ~ 610.9
        let past_margin = pt(10.0, -11.1 / 70.0, 0.0); // u ~ 611.1
        // Left edge at u = 590 has no margin: u ~ 589 falls out.
        let past_left = pt(10.0, 11.0 / 70.0, 0.0); // u ~ 589

        let cloud = PointCloud::new(vec![inside, near, behind, on_margin, past_margin, past_left]);
        let bbox = BBox2D::new(590.0, 190.0, 610.0, 210.0).unwrap();
        let cropped = crop_to_bbox(&cloud, &calib, &bbox, 5.0).unwrap();
        assert_eq!(cropped.points, vec![inside, on_margin]);
    }

    #[test]
    fn crop_near_limit_is_configurable() {
        let calib = test_calibration();
        let cloud = PointCloud::new(vec![pt(2.0, 0.0, 0.0), pt(10.0, 0.0, 0.0)]);
        let bbox = BBox2D::new(0.0, 0.0, 1200.0, 400.0).unwrap();
        let strict = crop_to_bbox(&cloud, &calib, &bbox, 5.0).unwrap();
        assert_eq!(strict.len(), 1);
        let lax = crop_to_bbox(&cloud, &calib, &bbox, 1.0).unwrap();
        assert_eq!(lax.len(), 2);
    }

    #[test]
    fn crop_keeps_original_sensor_coordinates() {
        let calib = test_calibration();
        let original = pt(12.5, -0.4, 0.7);
        let cloud = PointCloud::new(vec![original]);
        let bbox = BBox2D::new(0.0, 0.0, 1200.0, 400.0).unwrap();
        let cropped = crop_to_bbox(&cloud, &calib, &bbox, 5.0).unwrap();
        assert_eq!(cropped.points, vec![original]);
    }

    #[test]
    fn calibration_rejects_non_orthonormal_rotations() {
        let p = [
            [700.0, 0.0, 600.0, 0.0],
            [0.0, 700.0, 200.0, 0.0],
            [0.0, 0.0, 1.0, 0.0],
        ];
        let r = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        let sheared = [
            [1.0, 0.2, 0.0, 0.0],
            [0.0, 1.0, 0.0, 0.0],
            [0.0, 0.0, 1.0, 0.0],
        ];
        assert!(CalibrationSet::new(p, r, sheared).is_err());
    }

    #[test]
    fn bbox_rejects_inverted_corners() {
        assert!(BBox2D::new(10.0, 0.0, 5.0, 5.0).is_err());
        assert!(BBox2D::new(0.0, 10.0, 5.0, 5.0).is_err());
        assert!(BBox2D::new(0.0, f64::NAN, 5.0, 5.0).is_err());
    }

    /// Place `count` points on the +x axis around the given range.
    fn shell(range: f64, count: usize) -> Vec<Point<f64>> {
        (0..count)
            .map(|i| pt(range + i as f64 * 0.01, 0.0, 0.0))
            .collect()
    }

    #[test]
    fn nearby_majority_cluster_wins() {
        // 10 points near 2 m vs 3 points near 8 m:
        // weights 10 * 1.0 vs 3 * 0.5.
        let mut points = shell(2.0, 10);
        points.extend(shell(8.0, 3));
        let cloud = PointCloud::new(points.clone());
        let fg = cluster_foreground(&cloud, 0.25, 1.0).unwrap();
        assert_eq!(fg.len(), 10);
        assert!(fg.points.iter().all(|p| p.x < 3.0));
    }

    #[test]
    fn large_far_cluster_outweighs_small_near_one() {
        // 3 points near 2 m vs 10 points near 8 m:
        // weights 3 * 1.0 vs 10 * 0.5.
        let mut points = shell(2.0, 3);
        points.extend(shell(8.0, 10));
        let cloud = PointCloud::new(points);
        let fg = cluster_foreground(&cloud, 0.25, 1.0).unwrap();
        assert_eq!(fg.len(), 10);
        assert!(fg.points.iter().all(|p| p.x > 7.0));
    }

    #[test]
    fn gap_splits_follow_sorted_ranges_not_input_order() {
        // Interleave the two shells in input order; clustering must still
        // separate them by range.
        let near = shell(3.0, 4);
        let far = shell(9.0, 2);
        let mut points = Vec::new();
        for i in 0..4 {
            points.push(near[i]);
            if i < 2 {
                points.push(far[i]);
            }
        }
        let cloud = PointCloud::new(points);
        let fg = cluster_foreground(&cloud, 0.25, 1.0).unwrap();
        assert_eq!(fg.len(), 4);
        // Output is ordered by range.
        for w in fg.points.windows(2) {
            assert!(w[0].range() <= w[1].range());
        }
    }

    #[test]
    fn equal_weights_prefer_the_nearer_cluster() {
        // 4 near and 8 far: weights 4 * 1.0 vs 8 * 0.5 — a tie, so the
        // first (nearest) cluster is kept.
        let mut points = shell(2.0, 4);
        points.extend(shell(8.0, 8));
        let cloud = PointCloud::new(points);
        let fg = cluster_foreground(&cloud, 0.25, 1.0).unwrap();
        assert_eq!(fg.len(), 4);
        assert!(fg.points.iter().all(|p| p.x < 3.0));
    }

    #[test]
    fn single_cluster_consumes_the_whole_cloud() {
        let cloud = PointCloud::new(shell(5.0, 6));
        let fg = cluster_foreground(&cloud, 0.25, 1.0).unwrap();
        assert_eq!(fg.len(), 6);
    }

    #[test]
    fn cluster_validates_inputs() {
        let cloud = PointCloud::new(shell(5.0, 3));
        assert!(cluster_foreground(&PointCloud::<f64>::default(), 0.25, 1.0).is_err());
        assert!(cluster_foreground(&cloud, 0.0, 1.0).is_err());
        assert!(cluster_foreground(&cloud, 0.25, 0.0).is_err());
        assert!(cluster_foreground(&cloud, 0.25, 1.5).is_err());
    }

    #[test]
    fn downsampling_keeps_a_subset_in_original_order() {
        let points: Vec<Point<f64>> = (0..100)
            .map(|i| pt(5.0 + i as f64, i as f64 * 0.1, 0.0))
            .collect();
        let cloud = PointCloud::new(points.clone());
        let out = resample(&cloud, 40, 4, 7).unwrap();
        assert_eq!(out.len(), 40);
        // Every output point is an original, and order is preserved.
        let mut cursor = 0usize;
        for p in &out.points {
            let found = points[cursor..].iter().position(|q| q == p);
            assert!(found.is_some(), "output point is not an original");
            cursor += found.unwrap() + 1;
        }
    }

    #[test]
    fn upsampling_appends_neighbor_midpoints() {
        let points = vec![
            pt(5.0, 0.0, 0.0),
            pt(5.0, 1.0, 0.0),
            pt(5.0, 0.0, 1.0),
            pt(6.0, 0.5, 0.5),
        ];
        let cloud = PointCloud::new(points.clone());
        let out = resample(&cloud, 9, 2, 11).unwrap();
        assert_eq!(out.len(), 9);
        assert_eq!(&out.points[..4], &points[..]);
        // Each synthetic point is the midpoint of two originals.
        for s in &out.points[4..] {
            let is_midpoint = points.iter().enumerate().any(|(i, a)| {
                points.iter().skip(i).any(|b| {
                    (a.x + b.x) / 2.0 == s.x
                        && (a.y + b.y) / 2.0 == s.y
                        && (a.z + b.z) / 2.0 == s.z
                        && (a.reflectance + b.reflectance) / 2.0 == s.reflectance
                })
            });
            assert!(is_midpoint, "synthetic point {s:?} is not a midpoint");
        }
    }

    #[test]
    fn upsampling_a_singleton_duplicates_it() {
        let cloud = PointCloud::new(vec![pt(5.0, 1.0, 2.0)]);
        let out = resample(&cloud, 3, 4, 3).unwrap();
        assert_eq!(out.len(), 3);
        assert!(out.points.iter().all(|p| *p == cloud.points[0]));
    }

    #[test]
    fn resampling_at_target_is_identity_and_seeds_reproduce() {
        let points: Vec<Point<f64>> = (0..20).map(|i| pt(5.0 + i as f64, 0.0, 0.0)).collect();
        let cloud = PointCloud::new(points);
        assert_eq!(resample(&cloud, 20, 4, 1).unwrap(), cloud);

        let a = resample(&cloud, 7, 4, 42).unwrap();
        let b = resample(&cloud, 7, 4, 42).unwrap();
        assert_eq!(a, b);
        let c = resample(&cloud, 50, 4, 42).unwrap();
        let d = resample(&cloud, 50, 4, 42).unwrap();
        assert_eq!(c, d);
    }

    #[test]
    fn resample_validates_inputs() {
        let cloud = PointCloud::new(vec![pt(1.0, 2.0, 3.0)]);
        assert!(resample(&PointCloud::<f64>::default(), 10, 4, 0).is_err());
        assert!(resample(&cloud, 0, 4, 0).is_err());
        assert!(resample(&cloud, 10, 0, 0).is_err());
        let nan_cloud = PointCloud::new(vec![Point::new(f64::NAN, 0.0, 0.0, 0.0)]);
        assert!(resample(&nan_cloud, 10, 4, 0).is_err());
    }

    #[test]
    fn rigid_pre_transform_composed_into_calibration_leaves_crop_unchanged() {
        // Rotate the sensor frame 30 degrees about z and shift it; feeding
        // transformed points through a calibration whose sensor-to-camera
        // transform absorbs the inverse must reproduce the original crop.
        let calib = test_calibration();
        let (sin, cos) = (30.0f64.to_radians().sin(), 30.0f64.to_radians().cos());
        let shift = [1.5, -0.3, 0.2];
        // Forward transform W: sensor -> warped frame.
        let rot = [[cos, -sin, 0.0], [sin, cos, 0.0], [0.0, 0.0, 1.0]];
        let warp = |p: &Point<f64>| {
            Point::new(
                rot[0][0] * p.x + rot[0][1] * p.y + rot[0][2] * p.z + shift[0],
                rot[1][0] * p.x + rot[1][1] * p.y + rot[1][2] * p.z + shift[1],
                rot[2][0] * p.x + rot[2][1] * p.y + rot[2][2] * p.z + shift[2],
                p.reflectance,
            )
        };
        // Inverse of W: x = R^T (y - t).
        let inv_rot = [
            [rot[0][0], rot[1][0], rot[2][0]],
            [rot[0][1], rot[1][1], rot[2][1]],
            [rot[0][2], rot[1][2], rot[2][2]],
        ];
        let inv_shift = [
            -(inv_rot[0][0] * shift[0] + inv_rot[0][1] * shift[1] + inv_rot[0][2] * shift[2]),
            -(inv_rot[1][0] * shift[0] + inv_rot[1][1] * shift[1] + inv_rot[1][2] * shift[2]),
            -(inv_rot[2][0] * shift[0] + inv_rot[2][1] * shift[1] + inv_rot[2][2] * shift[2]),
        ];
        // Compose: T_new = T_old * W^-1 (4x4 product, top three rows kept).
        let t_old = calib.t_lidar_cam();
        let mut w_inv = [[0.0f64; 4]; 4];
        for i in 0..3 {
            w_inv[i][..3].copy_from_slice(&inv_rot[i]);
            w_inv[i][3] = inv_shift[i];
        }
        w_inv[3][3] = 1.0;
        let mut t_new = [[0.0f64; 4]; 3];
        for (i, row) in t_new.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = (0..4).map(|k| t_old[i][k] * w_inv[k][j]).sum();
            }
        }
        let p = *calib.p_rect();
        let r = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        let recalib = CalibrationSet::new(p, r, t_new).unwrap();

        let points: Vec<Point<f64>> = vec![
            pt(10.0, 0.0, 0.0),
            pt(12.0, 1.0, -0.5),
            pt(8.0, -0.7, 0.3),
            pt(30.0, 4.0, 1.0),
        ];
        let bbox = BBox2D::new(550.0, 150.0, 650.0, 250.0).unwrap();
        let direct = crop_to_bbox(&PointCloud::new(points.clone()), &calib, &bbox, 5.0).unwrap();
        let warped: Vec<Point<f64>> = points.iter().map(|p| warp(p)).collect();

        // The near cull compares the warped forward coordinate, so disable
        // it on both sides to isolate the projection geometry.
        let direct_all =
            crop_to_bbox(&PointCloud::new(points.clone()), &calib, &bbox, -1e9).unwrap();
        let warped_all =
            crop_to_bbox(&PointCloud::new(warped.clone()), &recalib, &bbox, -1e9).unwrap();
        assert_eq!(direct_all.len(), warped_all.len());
        assert_eq!(direct.len(), direct_all.len());
        // Warped kept points correspond to the direct kept points.
        for (d, w) in direct_all.points.iter().zip(&warped_all.points) {
            let rewarped = warp(d);
            assert!((rewarped.x - w.x).abs() < 1e-9);
            assert!((rewarped.y - w.y).abs() < 1e-9);
            assert!((rewarped.z - w.z).abs() < 1e-9);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn resample_always_hits_the_target_cardinality(
            n in 1usize..60,
            target in 1usize..90,
            seed in 0u64..1000,
        ) {
            let points: Vec<Point<f64>> = (0..n)
                .map(|i| pt(5.0 + (i as f64) * 0.3, (i % 7) as f64 * 0.2, 0.0))
                .collect();
            let cloud = PointCloud::new(points);
            let out = resample(&cloud, target, 4, seed).unwrap();
            prop_assert_eq!(out.len(), target);
        }
    }
}
