use super::{AreaSpec, BaseStation, UavPath};

/// Cell-coverage bitmap. A cell is covered when some point lies within `R`
/// of its midpoint.
#[derive(Debug, Clone)]
pub struct CoverageGrid {
    n: usize,
    delta: f64,
    r: f64,
    covered: Vec<bool>,
    count: usize,
}

impl CoverageGrid {
    pub fn new(area: &AreaSpec) -> Self {
        let n = area.cells_per_side();
        Self { n, delta: area.delta, r: area.r, covered: vec![false; n * n], count: 0 }
    }

    pub fn total_cells(&self) -> usize {
        self.n * self.n
    }

    pub fn covered_cells(&self) -> usize {
        self.count
    }

    pub fn uncovered_cells(&self) -> usize {
        self.total_cells() - self.count
    }

    pub fn is_covered(&self, ix: usize, iy: usize) -> bool {
        self.covered[iy * self.n + ix]
    }

    pub fn mark(&mut self, (x, y): (f64, f64)) {
        let (lo_x, hi_x) = self.span(x);
        let (lo_y, hi_y) = self.span(y);
        for iy in lo_y..hi_y {
            let my = (iy as f64 + 0.5) * self.delta;
            for ix in lo_x..hi_x {
                let k = iy * self.n + ix;
                if self.covered[k] {
                    continue;
                }
                let mx = (ix as f64 + 0.5) * self.delta;
                if ((mx - x).powi(2) + (my - y).powi(2)).sqrt() <= self.r {
                    self.covered[k] = true;
                    self.count += 1;
                }
            }
        }
    }

    // Half-open index range of cells whose midpoint may lie within R of `v`,
    // padded by one cell on each side against rounding.
    fn span(&self, v: f64) -> (usize, usize) {
        let lo = ((v - self.r) / self.delta - 0.5).floor() - 1.0;
        let hi = ((v + self.r) / self.delta - 0.5).ceil() + 2.0;
        let clamp = |f: f64| f.max(0.0).min(self.n as f64) as usize;
        (clamp(lo), clamp(hi))
    }
}

/// Uncovered area (m²) when the given points are the only coverage sources.
pub fn uncovered_area_points(points: impl IntoIterator<Item = (f64, f64)>, area: &AreaSpec) -> f64 {
    let mut g = CoverageGrid::new(area);
    for p in points {
        g.mark(p);
    }
    g.uncovered_cells() as f64 * area.cell_area()
}

/// Uncovered area (m²) counting every waypoint of every path.
pub fn uncovered_area(paths: &[UavPath], area: &AreaSpec) -> f64 {
    uncovered_area_points(paths.iter().flat_map(|p| p.points()), area)
}

/// Points along the flown polyline at most `spacing` apart, waypoints
/// included, in flight order.
pub fn flown_samples(path: &UavPath, spacing: f64) -> Vec<(f64, f64)> {
    let pts: Vec<(f64, f64)> = path.points().collect();
    let mut out = Vec::new();
    if let Some(&first) = pts.first() {
        out.push(first);
    }
    for w in pts.windows(2) {
        let (a, b) = (w[0], w[1]);
        let len = (b.0 - a.0).hypot(b.1 - a.1);
        let n = (len / spacing).ceil().max(1.0) as usize;
        for k in 1..=n {
            let t = k as f64 / n as f64;
            out.push((a.0 + (b.0 - a.0) * t, a.1 + (b.1 - a.1) * t));
        }
    }
    out
}

/// Index of the nearest station; ties go to the lower index.
pub fn nearest_station(p: (f64, f64), stations: &[BaseStation]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (k, s) in stations.iter().enumerate() {
        let d2 = (p.0 - s.x).powi(2) + (p.1 - s.y).powi(2);
        if best.is_none_or(|(_, b)| d2 < b) {
            best = Some((k, d2));
        }
    }
    best.map(|(k, _)| k)
}

/// Number of consecutive waypoint pairs whose nearest station differs.
pub fn handovers(path: &UavPath, stations: &[BaseStation]) -> usize {
    let serving: Vec<Option<usize>> = path.points().map(|p| nearest_station(p, stations)).collect();
    serving.windows(2).filter(|w| w[0] != w[1]).count()
}

/// Time until the union of the flown trajectories covers `fraction` of the
/// cells, with all UAVs launching together at `speed`. Each path is sampled
/// as in [`flown_samples`] with spacing `speed · step`. `None` if the plan
/// never gets there.
pub fn time_to_coverage(paths: &[UavPath], area: &AreaSpec, speed: f64, step: f64, fraction: f64) -> Option<f64> {
    let mut g = CoverageGrid::new(area);
    let target = (fraction * g.total_cells() as f64).ceil() as usize;
    let spacing = speed * step;
    let mut timed: Vec<(f64, (f64, f64))> = Vec::new();
    for p in paths {
        let pts: Vec<(f64, f64)> = p.points().collect();
        if let Some(&first) = pts.first() {
            timed.push((0.0, first));
        }
        let mut flown = 0.0;
        for w in pts.windows(2) {
            let (a, b) = (w[0], w[1]);
            let len = (b.0 - a.0).hypot(b.1 - a.1);
            let n = (len / spacing).ceil().max(1.0) as usize;
            for k in 1..=n {
                let t = k as f64 / n as f64;
                let s = flown + len * k as f64 / n as f64;
                timed.push((s / speed, (a.0 + (b.0 - a.0) * t, a.1 + (b.1 - a.1) * t)));
            }
            flown += len;
        }
    }
    timed.sort_by(|x, y| x.0.total_cmp(&y.0));
    if target == 0 {
        return Some(0.0);
    }
    for (t, p) in timed {
        g.mark(p);
        if g.covered_cells() >= target {
            return Some(t);
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    // Direct evaluation of the definition over every cell midpoint.
    fn brute(points: &[(f64, f64)], area: &AreaSpec) -> f64 {
        let n = area.cells_per_side();
        let mut unc = 0;
        for iy in 0..n {
            for ix in 0..n {
                let m = ((ix as f64 + 0.5) * area.delta, (iy as f64 + 0.5) * area.delta);
                let dmin = points
                    .iter()
                    .map(|p| ((m.0 - p.0).powi(2) + (m.1 - p.1).powi(2)).sqrt())
                    .fold(f64::INFINITY, f64::min);
                if dmin > area.r {
                    unc += 1;
                }
            }
        }
        unc as f64 * area.delta * area.delta
    }

    #[test]
    fn empty_is_fully_uncovered() {
        let a = AreaSpec { l: 60.0, delta: 15.0, r: 15.0 };
        assert_eq!(uncovered_area(&[], &a), 3600.0);
    }

    #[test]
    fn single_cell_midpoint() {
        let a = AreaSpec { l: 10.0, delta: 10.0, r: 10.0 * 2f64.sqrt() / 2.0 };
        let p = UavPath::from_points(&[(5.0, 5.0)]);
        assert_eq!(uncovered_area(&[p], &a), 0.0);
    }

    #[test]
    fn four_by_four_center_waypoint() {
        let a = AreaSpec { l: 60.0, delta: 15.0, r: 15.0 };
        let p = UavPath::from_points(&[(30.0, 30.0)]);
        // the 4 inner midpoints are 10.6 m away, the rest are farther than 15 m
        assert_eq!(uncovered_area(std::slice::from_ref(&p), &a), 12.0 * 225.0);
        assert_eq!(uncovered_area(&[p], &a), brute(&[(30.0, 30.0)], &a));
    }

    #[test]
    fn grid_matches_brute_force() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let a = AreaSpec { l: 90.0, delta: [5.0, 15.0, 30.0][rng.random_range(0..3)], r: rng.random_range(1.0..40.0) };
            let pts: Vec<(f64, f64)> = (0..rng.random_range(0..12))
                .map(|_| (rng.random_range(0.0..90.0), rng.random_range(0.0..90.0)))
                .collect();
            assert_eq!(uncovered_area_points(pts.iter().copied(), &a), brute(&pts, &a));
        }
    }

    #[test]
    fn adding_a_waypoint_never_uncovers() {
        let a = AreaSpec { l: 60.0, delta: 15.0, r: 12.0 };
        let mut pts = vec![(30.0, 30.0)];
        let mut prev = uncovered_area_points(pts.iter().copied(), &a);
        for p in [(5.0, 5.0), (50.0, 10.0), (20.0, 55.0), (59.0, 59.0)] {
            pts.push(p);
            let now = uncovered_area_points(pts.iter().copied(), &a);
            assert!(now <= prev);
            prev = now;
        }
    }

    #[test]
    fn handover_cases() {
        let one = [BaseStation { x: 0.0, y: 0.0, carrier_freq: 3.5e9 }];
        let two = [
            BaseStation { x: 0.0, y: 0.0, carrier_freq: 3.5e9 },
            BaseStation { x: 100.0, y: 0.0, carrier_freq: 3.5e9 },
        ];
        let crossing = UavPath::from_points(&[(10.0, 5.0), (30.0, 5.0), (70.0, 5.0), (90.0, 5.0)]);
        assert_eq!(handovers(&crossing, &one), 0);
        assert_eq!(handovers(&crossing, &two), 1);
        let near0 = UavPath::from_points(&[(10.0, 5.0), (20.0, 30.0), (40.0, -5.0)]);
        assert_eq!(handovers(&near0, &two), 0);
        // exactly on the bisector counts as the lower index
        assert_eq!(nearest_station((50.0, 3.0), &two), Some(0));
    }

    #[test]
    fn samples_respect_spacing() {
        let p = UavPath::from_points(&[(0.0, 0.0), (10.0, 0.0), (10.0, 3.0)]);
        let s = flown_samples(&p, 2.0);
        assert_eq!(s.first(), Some(&(0.0, 0.0)));
        assert_eq!(s.last(), Some(&(10.0, 3.0)));
        assert!(s.windows(2).all(|w| (w[1].0 - w[0].0).hypot(w[1].1 - w[0].1) <= 2.0 + 1e-12));
        assert!(s.contains(&(10.0, 0.0)));
    }

    #[test]
    fn coverage_time_of_a_sweep() {
        let a = AreaSpec { l: 30.0, delta: 15.0, r: 8.2 };
        let p = UavPath::from_points(&[(7.5, 7.5), (22.5, 7.5), (22.5, 22.5), (7.5, 22.5)]);
        assert_eq!(time_to_coverage(std::slice::from_ref(&p), &a, 1.0, 0.5, 0.25), Some(0.0));
        assert_eq!(time_to_coverage(std::slice::from_ref(&p), &a, 1.0, 0.5, 1.0), Some(37.0));
        let stuck = UavPath::from_points(&[(7.5, 7.5)]);
        assert_eq!(time_to_coverage(&[stuck], &a, 1.0, 0.5, 0.5), None);
    }
}
