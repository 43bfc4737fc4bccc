//! Multiply-accumulate counts for standard and heterogeneous convolutions.
//!
//! Costs are exact rationals: a HetConv layer with part ratio `P` keeps
//! `1/P` of its k×k kernels, which need not divide the integer cost.

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::CostError;

pub type Cost = Ratio<u128>;

fn default_k() -> u64 {
    3
}

fn default_p() -> u64 {
    4
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvSpec {
    pub w: u64,
    pub h: u64,
    pub ci: u64,
    pub co: u64,
    #[serde(default = "default_k")]
    pub k: u64,
    #[serde(default = "default_p")]
    pub p: u64,
}

impl ConvSpec {
    pub fn new(w: u64, h: u64, ci: u64, co: u64) -> Self {
        Self { w, h, ci, co, k: 3, p: 4 }
    }

    pub fn validate(&self) -> Result<(), CostError> {
        if [self.w, self.h, self.ci, self.co, self.k, self.p].contains(&0) {
            return Err(CostError::Spec(format!("{self}: all dimensions must be positive")));
        }
        Ok(())
    }

    fn whcc(&self) -> u128 {
        self.w as u128 * self.h as u128 * self.ci as u128 * self.co as u128
    }
}

impl std::fmt::Display for ConvSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}x{}x{}->{} k{} p{}", self.w, self.h, self.ci, self.co, self.k, self.p)
    }
}

/// `W·H·Ci·Co·k²`
pub fn std_conv_cost(spec: &ConvSpec) -> u128 {
    spec.whcc() * spec.k as u128 * spec.k as u128
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HetConvCost {
    pub kxk: Cost,
    pub pointwise: Cost,
    pub total: Cost,
}

/// `1/P` of the kernels stay k×k, the remaining `(P−1)/P` become 1×1.
pub fn hetconv_cost(spec: &ConvSpec) -> HetConvCost {
    let p = spec.p as u128;
    let kxk = Cost::new(std_conv_cost(spec), p);
    let pointwise = Cost::new(spec.whcc() * (p - 1), p);
    HetConvCost { kxk, pointwise, total: kxk + pointwise }
}

/// FLOPs saved by swapping both 3×3 convolutions of a bottleneck for
/// HetConv with `P = 4`: `12·W·H·Ci·Co`.
pub fn bottleneck_reduction(spec: &ConvSpec) -> Result<u128, CostError> {
    if spec.k != 3 || spec.p != 4 {
        return Err(CostError::Spec(format!("{spec}: bottleneck reduction needs k = 3 and P = 4")));
    }
    Ok(12 * spec.whcc())
}

/// Channels after concatenating the input with `n` branch outputs.
pub fn ghost_concat_channels(input_channels: u64, branch_channels: u64, n_iterations: u64) -> u64 {
    input_channels + n_iterations * branch_channels
}

/// Formats a rational as a decimal: exact when the expansion terminates,
/// otherwise to 12 places.
pub fn format_cost(c: &Cost) -> String {
    if c.is_integer() {
        return c.to_integer().to_string();
    }
    let mut d = *c.denom();
    let (mut twos, mut fives) = (0u32, 0u32);
    while d % 2 == 0 {
        d /= 2;
        twos += 1;
    }
    while d % 5 == 0 {
        d /= 5;
        fives += 1;
    }
    let (places, exact) = if d == 1 { (twos.max(fives), true) } else { (12, false) };
    let scale = 10u128.pow(places);
    let scaled = c.numer() * scale / c.denom();
    let int = scaled / scale;
    let frac = scaled % scale;
    let mut s = format!("{int}.{frac:0width$}", width = places as usize);
    if exact {
        while s.ends_with('0') {
            s.pop();
        }
    }
    s
}

pub const CSV_HEADER: &str = "spec,std,het_3x3,het_1x1,het_total,reduction_R";

/// One CSV row; `reduction_R` is empty when it is undefined for the spec.
pub fn csv_row(spec: &ConvSpec) -> Result<String, CostError> {
    spec.validate()?;
    let het = hetconv_cost(spec);
    let r = bottleneck_reduction(spec).map(|r| r.to_string()).unwrap_or_default();
    Ok(format!(
        "{},{},{},{},{},{}",
        spec,
        std_conv_cost(spec),
        format_cost(&het.kxk),
        format_cost(&het.pointwise),
        format_cost(&het.total),
        r
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn std_cost_cases() {
        assert_eq!(std_conv_cost(&ConvSpec::new(1, 1, 1, 1)), 9);
        assert_eq!(std_conv_cost(&ConvSpec::new(10, 10, 16, 16)), 230_400);
        let pw = ConvSpec { k: 1, ..ConvSpec::new(7, 5, 3, 2) };
        assert_eq!(std_conv_cost(&pw), 7 * 5 * 3 * 2);
    }

    #[test]
    fn hetconv_cases() {
        let h = hetconv_cost(&ConvSpec::new(10, 10, 16, 16));
        assert_eq!(h.kxk, Cost::from_integer(57_600));
        assert_eq!(h.pointwise, Cost::from_integer(19_200));
        assert_eq!(h.total, Cost::from_integer(76_800));
        let u = hetconv_cost(&ConvSpec::new(1, 1, 1, 1));
        assert_eq!(u.kxk, Cost::new(9, 4));
        assert_eq!(u.pointwise, Cost::new(3, 4));
        assert_eq!(u.total, Cost::from_integer(3));
    }

    #[test]
    fn reduction_cases() {
        assert_eq!(bottleneck_reduction(&ConvSpec::new(10, 10, 16, 16)).unwrap(), 307_200);
        assert_eq!(bottleneck_reduction(&ConvSpec::new(1, 1, 1, 1)).unwrap(), 12);
        assert!(bottleneck_reduction(&ConvSpec { p: 2, ..ConvSpec::new(1, 1, 1, 1) }).is_err());
    }

    #[test]
    fn ghost_channels() {
        assert_eq!(ghost_concat_channels(16, 16, 1), 32);
        assert_eq!(ghost_concat_channels(8, 8, 3), 32);
        assert_eq!(ghost_concat_channels(8, 5, 0), 8);
    }

    #[test]
    fn decimal_formatting() {
        assert_eq!(format_cost(&Cost::new(9, 4)), "2.25");
        assert_eq!(format_cost(&Cost::new(3, 4)), "0.75");
        assert_eq!(format_cost(&Cost::from_integer(3)), "3");
        assert_eq!(format_cost(&Cost::new(1, 3)), "0.333333333333");
        assert_eq!(format_cost(&Cost::new(21, 8)), "2.625");
    }

    #[test]
    fn csv_rows() {
        assert_eq!(csv_row(&ConvSpec::new(1, 1, 1, 1)).unwrap(), "1x1x1->1 k3 p4,9,2.25,0.75,3,12");
        let odd = ConvSpec { p: 3, ..ConvSpec::new(1, 1, 1, 1) };
        assert_eq!(csv_row(&odd).unwrap(), "1x1x1->1 k3 p3,9,3,0.666666666666,3.666666666666,");
        assert!(csv_row(&ConvSpec::new(0, 1, 1, 1)).is_err());
    }
}
