//! Bundled example studies: published HIV disease-progression count data and
//! synthetic chains covering the eigenvalue cases that block stochastic
//! roots (negative, multiple negative, complex, and mixed spectra).
//!
//! Each fixture carries its count matrix, structural mask, observation
//! intervals, per-interval convergence tolerances, grid denominators for the
//! full-scale and desk-scale searches, and the published reference values
//! that the regression suite checks against.

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::likelihood::LikelihoodContext;
use crate::matrix::CountMatrix;
use crate::optimizer::OptimizerSettings;
use crate::params::ConstraintMask;

/// Grid sizing: `Paper` reproduces the full-scale study grids (millions of
/// points); `Small` targets roughly 10^4 points for desk-scale runs.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GridScale {
    Small,
    Paper,
}

/// Structural constraint pattern of a fixture.
#[derive(Clone, Copy, Debug)]
enum MaskKind {
    /// Every Θ entry free.
    Unconstrained,
    /// Last state absorbing, everything else free.
    AbsorbingLast,
    /// Progressive disease model: no transitions to lower-numbered states,
    /// last state absorbing.
    UpperTriangularAbsorbingLast,
}

/// Reference values published for a fixture, used by the regression suite.
#[derive(Clone, Debug)]
pub struct Expected {
    /// Interval MLE rounded to three decimals, when printed in full.
    pub interval_mle: Option<&'static [&'static [f64]]>,
    /// Non-unit eigenvalues `(re, im)` of the interval MLE as printed.
    pub eigenvalues: &'static [(f64, f64)],
    /// Global maximizers per observation interval, rounded to three decimals.
    pub maximizers: &'static [(u32, &'static [&'static [f64]])],
    /// Log-likelihood gradients at the printed maximizers.
    pub gradients: &'static [(u32, &'static [&'static [f64]])],
    /// Dashed-line cutoffs for the uniqueness analysis, per interval.
    pub top_fraction: &'static [(u32, f64)],
    /// Reported fraction of grid points in the top convergence plateau.
    pub plateau_fraction: &'static [(u32, f64)],
    /// `(T, count)` of real primary roots when enumerated.
    pub real_root_count: Option<(u32, usize)>,
    /// Principal root as printed (with its inadmissible negative entry).
    pub principal_root: Option<&'static [&'static [f64]]>,
    /// All real roots as printed, when the study lists them.
    pub real_roots: &'static [&'static [&'static [f64]]],
    /// Published relative Frobenius error of `P̂^T` against the interval MLE.
    pub frobenius_error: Option<f64>,
}

/// One bundled study.
#[derive(Clone, Debug)]
pub struct StudyFixture {
    pub name: &'static str,
    pub title: &'static str,
    counts_rows: &'static [&'static [u64]],
    mask_kind: MaskKind,
    pub cycles: &'static [u32],
    paper_grid: &'static [u32],
    small_grid: &'static [u32],
    pub expected: Expected,
}

impl StudyFixture {
    pub fn counts(&self) -> CountMatrix {
        let rows: Vec<Vec<u64>> = self.counts_rows.iter().map(|r| r.to_vec()).collect();
        CountMatrix::new(&rows).expect("fixture counts are valid")
    }

    pub fn mask(&self) -> ConstraintMask {
        let s = self.counts_rows.len();
        match self.mask_kind {
            MaskKind::Unconstrained => ConstraintMask::unconstrained(s),
            MaskKind::AbsorbingLast => {
                let mut mask = ConstraintMask::unconstrained(s);
                mask.set_absorbing(s - 1);
                mask
            }
            MaskKind::UpperTriangularAbsorbingLast => {
                use crate::params::MaskEntry::*;
                let rows = (0..s)
                    .map(|i| {
                        (0..s - 1)
                            .map(|j| if j < i { Fixed(0.0) } else { Free })
                            .collect()
                    })
                    .collect();
                let mut mask = ConstraintMask::new(rows).expect("fixture mask is valid");
                mask.set_absorbing(s - 1);
                mask
            }
        }
    }

    pub fn context(&self, t: u32) -> Result<LikelihoodContext> {
        LikelihoodContext::new(self.counts(), t, self.mask())
    }

    /// Convergence tolerance preset for one observation interval.
    pub fn settings(&self, t: u32) -> OptimizerSettings {
        let (outer, inner) = match self.name {
            "study2" => (1e-13, 1e-12),
            "study3" => (1e-12, 1e-10),
            _ => match t {
                0..=2 => (1e-10, 1e-8),
                3..=24 => (1e-11, 1e-9),
                _ => (1e-12, 1e-10),
            },
        };
        OptimizerSettings::with_tolerances(outer, inner, inner)
    }

    pub fn grid(&self, scale: GridScale) -> Result<GridSpec> {
        let denoms = match scale {
            GridScale::Paper => self.paper_grid,
            GridScale::Small => self.small_grid,
        };
        GridSpec::new(self.mask(), denoms.to_vec())
    }

    pub fn expected_maximizer(&self, t: u32) -> Option<&'static [&'static [f64]]> {
        self.expected
            .maximizers
            .iter()
            .find(|(mt, _)| *mt == t)
            .map(|(_, m)| *m)
    }

    pub fn expected_gradient(&self, t: u32) -> Option<&'static [&'static [f64]]> {
        self.expected
            .gradients
            .iter()
            .find(|(mt, _)| *mt == t)
            .map(|(_, m)| *m)
    }

    pub fn top_fraction(&self, t: u32) -> Option<f64> {
        self.expected
            .top_fraction
            .iter()
            .find(|(mt, _)| *mt == t)
            .map(|(_, f)| *f)
    }

    pub fn plateau_fraction(&self, t: u32) -> Option<f64> {
        self.expected
            .plateau_fraction
            .iter()
            .find(|(mt, _)| *mt == t)
            .map(|(_, f)| *f)
    }
}

const NO_EXPECTED_ROOTS: &[&[&[f64]]] = &[];

static STUDIES: &[StudyFixture] = &[
    StudyFixture {
        name: "study2",
        title: "4-state HIV progression, annual counts, monthly cycle target",
        counts_rows: &[
            &[4494, 1257, 417, 61],
            &[0, 1734, 1214, 36],
            &[0, 0, 6724, 2240],
            &[0, 0, 0, 0],
        ],
        mask_kind: MaskKind::UpperTriangularAbsorbingLast,
        cycles: &[12],
        paper_grid: &[21, 21, 21, 21],
        small_grid: &[9, 9, 9, 9],
        expected: Expected {
            interval_mle: Some(&[
                &[0.721, 0.202, 0.067, 0.010],
                &[0.0, 0.581, 0.407, 0.012],
                &[0.0, 0.0, 0.750, 0.250],
                &[0.0, 0.0, 0.0, 1.0],
            ]),
            eigenvalues: &[(0.750, 0.0), (0.721, 0.0), (0.581, 0.0)],
            maximizers: &[(
                12,
                &[
                    &[0.973, 0.025, 0.002, 0.000],
                    &[0.0, 0.956, 0.044, 0.000],
                    &[0.0, 0.0, 0.978, 0.022],
                    &[0.0, 0.0, 0.0, 1.0],
                ],
            )],
            gradients: &[(
                12,
                &[
                    &[28.421, 69.054, 104.774],
                    &[0.0, 21710.401, 21745.079],
                    &[0.0, 0.0, -3837.441],
                    &[0.0, 0.0, 0.0],
                ],
            )],
            top_fraction: &[],
            plateau_fraction: &[],
            real_root_count: Some((12, 8)),
            principal_root: Some(&[
                &[0.973, 0.025, 0.001, 0.001],
                &[0.0, 0.956, 0.049, -0.005],
                &[0.0, 0.0, 0.976, 0.024],
                &[0.0, 0.0, 0.0, 1.0],
            ]),
            real_roots: NO_EXPECTED_ROOTS,
            frobenius_error: Some(0.0384),
        },
    },
    StudyFixture {
        name: "study3",
        title: "5-state HIV progression, six-month counts, monthly cycle target",
        counts_rows: &[
            &[339, 31, 24, 17, 5],
            &[233, 73, 55, 49, 6],
            &[150, 77, 63, 91, 34],
            &[70, 26, 60, 193, 66],
            &[0, 0, 0, 0, 415],
        ],
        mask_kind: MaskKind::AbsorbingLast,
        cycles: &[6],
        paper_grid: &[9, 9, 9, 9, 9],
        small_grid: &[6, 6, 6, 6, 6],
        expected: Expected {
            interval_mle: Some(&[
                &[0.815, 0.075, 0.058, 0.041, 0.012],
                &[0.560, 0.175, 0.132, 0.118, 0.014],
                &[0.361, 0.186, 0.152, 0.219, 0.082],
                &[0.169, 0.063, 0.145, 0.465, 0.159],
                &[0.0, 0.0, 0.0, 0.0, 1.0],
            ]),
            eigenvalues: &[(-0.005, 0.0)],
            maximizers: &[(
                6,
                &[
                    &[0.955, 0.021, 0.018, 0.005, 0.001],
                    &[0.201, 0.670, 0.106, 0.023, 0.000],
                    &[0.059, 0.185, 0.623, 0.118, 0.016],
                    &[0.027, 0.000, 0.078, 0.861, 0.034],
                    &[0.0, 0.0, 0.0, 0.0, 1.0],
                ],
            )],
            gradients: &[(
                6,
                &[
                    &[0.049, 0.048, 0.046, 0.047],
                    &[426.782, 426.781, 426.779, 426.778],
                    &[0.013, 0.012, 0.010, 0.010],
                    &[0.001, -57.638, -0.001, 0.000],
                    &[0.0, 0.0, 0.0, 0.0],
                ],
            )],
            top_fraction: &[(6, 0.9375)],
            plateau_fraction: &[(6, 0.94)],
            real_root_count: None,
            principal_root: None,
            real_roots: NO_EXPECTED_ROOTS,
            frobenius_error: None,
        },
    },
    StudyFixture {
        name: "study4",
        title: "synthetic 3-state chain, one negative eigenvalue",
        counts_rows: &[&[200, 650, 400], &[350, 100, 450], &[100, 500, 250]],
        mask_kind: MaskKind::Unconstrained,
        cycles: &[2, 24, 100],
        paper_grid: &[21, 21, 21],
        small_grid: &[8, 8, 8],
        expected: Expected {
            interval_mle: None,
            eigenvalues: &[(-0.439, 0.0), (0.004, 0.0)],
            maximizers: &[
                (
                    2,
                    &[
                        &[0.000, 0.775, 0.225],
                        &[0.000, 0.501, 0.499],
                        &[0.762, 0.000, 0.238],
                    ],
                ),
                (
                    24,
                    &[
                        &[0.858, 0.000, 0.142],
                        &[0.078, 0.922, 0.000],
                        &[0.000, 0.089, 0.911],
                    ],
                ),
                (
                    100,
                    &[
                        &[0.963, 0.000, 0.037],
                        &[0.020, 0.980, 0.000],
                        &[0.000, 0.023, 0.977],
                    ],
                ),
            ],
            gradients: &[
                (2, &[&[-14.807, 0.002], &[-360.156, -0.008], &[-0.002, -6.827]]),
                (24, &[&[0.009, -227.041], &[22.819, 22.790], &[-851.854, -0.005]]),
                (100, &[&[0.238, -674.966], &[32.510, 32.708], &[-2736.605, 0.121]]),
            ],
            top_fraction: &[(2, 0.3125), (24, 0.01)],
            plateau_fraction: &[(2, 0.30)],
            real_root_count: None,
            principal_root: None,
            real_roots: NO_EXPECTED_ROOTS,
            frobenius_error: None,
        },
    },
    StudyFixture {
        name: "study5",
        title: "synthetic 3-state chain, two negative eigenvalues",
        counts_rows: &[&[100, 200, 650], &[300, 350, 100], &[250, 300, 50]],
        mask_kind: MaskKind::Unconstrained,
        cycles: &[2, 24, 100],
        paper_grid: &[21, 21, 21],
        small_grid: &[8, 8, 8],
        expected: Expected {
            interval_mle: None,
            eigenvalues: &[(-0.328, 0.0), (-0.017, 0.0)],
            maximizers: &[
                (
                    2,
                    &[
                        &[0.206, 0.794, 0.000],
                        &[0.181, 0.043, 0.775],
                        &[0.591, 0.248, 0.161],
                    ],
                ),
                (
                    24,
                    &[
                        &[0.919, 0.000, 0.081],
                        &[0.039, 0.961, 0.000],
                        &[0.018, 0.049, 0.933],
                    ],
                ),
                (
                    100,
                    &[
                        &[0.980, 0.000, 0.020],
                        &[0.010, 0.990, 0.000],
                        &[0.005, 0.012, 0.983],
                    ],
                ),
            ],
            gradients: &[
                (2, &[&[491.270, 491.270], &[0.000, -0.001], &[0.001, 0.001]]),
                (24, &[&[-0.001, -2011.865], &[3014.974, 3014.990], &[-0.011, -0.002]]),
                (100, &[&[0.004, -7743.587], &[11652.493, 11652.492], &[-0.017, -0.002]]),
            ],
            top_fraction: &[(2, 0.50), (24, 0.03)],
            plateau_fraction: &[(2, 0.50)],
            real_root_count: None,
            principal_root: None,
            real_roots: NO_EXPECTED_ROOTS,
            frobenius_error: None,
        },
    },
    StudyFixture {
        name: "study6",
        title: "synthetic 3-state chain, complex conjugate eigenvalues",
        counts_rows: &[&[200, 400, 100], &[100, 250, 300], &[150, 200, 100]],
        mask_kind: MaskKind::Unconstrained,
        cycles: &[2, 24, 100],
        paper_grid: &[21, 21, 21],
        small_grid: &[8, 8, 8],
        expected: Expected {
            interval_mle: Some(&[
                &[0.286, 0.571, 0.143],
                &[0.154, 0.385, 0.462],
                &[0.333, 0.444, 0.222],
            ]),
            eigenvalues: &[(-0.054, 0.151), (-0.054, -0.151)],
            maximizers: &[
                (
                    2,
                    &[
                        &[0.000, 0.317, 0.683],
                        &[0.505, 0.345, 0.150],
                        &[0.160, 0.684, 0.156],
                    ],
                ),
                (
                    24,
                    &[
                        &[0.938, 0.062, 0.000],
                        &[0.000, 0.954, 0.046],
                        &[0.051, 0.021, 0.927],
                    ],
                ),
                (
                    100,
                    &[
                        &[0.985, 0.015, 0.000],
                        &[0.000, 0.989, 0.011],
                        &[0.013, 0.005, 0.982],
                    ],
                ),
            ],
            gradients: &[
                (2, &[&[-140.262, 0.000], &[0.000, 0.000], &[0.000, 0.000]]),
                (24, &[&[1299.309, 1299.308], &[-827.211, 0.001], &[-0.001, -0.003]]),
                (100, &[&[5076.655, 5076.649], &[-3310.540, 0.015], &[0.005, 0.004]]),
            ],
            top_fraction: &[(2, 0.50), (24, 0.03)],
            plateau_fraction: &[(2, 0.50)],
            real_root_count: Some((2, 2)),
            principal_root: None,
            real_roots: &[
                &[
                    &[0.601, 0.560, -0.160],
                    &[-0.032, 0.502, 0.530],
                    &[0.357, 0.284, 0.359],
                ],
                &[
                    &[-0.118, 0.337, 0.781],
                    &[0.515, 0.395, 0.090],
                    &[0.126, 0.612, 0.262],
                ],
            ],
            frobenius_error: None,
        },
    },
    StudyFixture {
        name: "study7",
        title: "synthetic 4-state chain, negative eigenvalue",
        counts_rows: &[
            &[100, 200, 650, 100],
            &[300, 350, 100, 200],
            &[250, 300, 50, 300],
            &[100, 200, 300, 400],
        ],
        mask_kind: MaskKind::Unconstrained,
        cycles: &[2, 24, 100],
        paper_grid: &[9, 9, 9, 9],
        small_grid: &[6, 6, 6, 6],
        expected: Expected {
            interval_mle: None,
            eigenvalues: &[(-0.310, 0.0), (0.222, 0.0), (0.007, 0.0)],
            maximizers: &[
                (
                    2,
                    &[
                        &[0.210, 0.715, 0.000, 0.075],
                        &[0.175, 0.000, 0.773, 0.053],
                        &[0.407, 0.146, 0.154, 0.294],
                        &[0.046, 0.338, 0.000, 0.616],
                    ],
                ),
                (
                    24,
                    &[
                        &[0.919, 0.000, 0.081, 0.000],
                        &[0.034, 0.949, 0.000, 0.017],
                        &[0.009, 0.046, 0.919, 0.026],
                        &[0.011, 0.009, 0.026, 0.955],
                    ],
                ),
                (
                    100,
                    &[
                        &[0.980, 0.000, 0.020, 0.000],
                        &[0.008, 0.987, 0.000, 0.004],
                        &[0.002, 0.011, 0.980, 0.006],
                        &[0.003, 0.002, 0.007, 0.989],
                    ],
                ),
            ],
            gradients: &[
                (
                    2,
                    &[
                        &[0.036, 0.026, -402.074],
                        &[0.021, -132.976, 0.008],
                        &[0.036, 0.036, 0.025],
                        &[-0.005, -0.007, -44.290],
                    ],
                ),
                (
                    24,
                    &[
                        &[1870.668, -31.145, 1870.723],
                        &[0.018, -0.096, -3129.985],
                        &[-0.065, -0.098, 0.010],
                        &[-0.088, -0.073, 0.070],
                    ],
                ),
                (
                    100,
                    &[
                        &[7244.156, -14.832, 7244.209],
                        &[-0.019, -0.062, -11980.129],
                        &[0.031, -0.008, 0.059],
                        &[-0.072, -0.109, -0.012],
                    ],
                ),
            ],
            top_fraction: &[(2, 0.125)],
            plateau_fraction: &[(2, 0.13)],
            real_root_count: None,
            principal_root: None,
            real_roots: NO_EXPECTED_ROOTS,
            frobenius_error: None,
        },
    },
    StudyFixture {
        name: "study8",
        title: "synthetic 4-state chain, negative and complex eigenvalues",
        counts_rows: &[
            &[200, 650, 400, 100],
            &[350, 100, 450, 200],
            &[100, 500, 250, 300],
            &[400, 300, 200, 100],
        ],
        mask_kind: MaskKind::Unconstrained,
        cycles: &[2, 24, 100],
        paper_grid: &[9, 9, 9, 9],
        small_grid: &[6, 6, 6, 6],
        expected: Expected {
            interval_mle: None,
            eigenvalues: &[(-0.357, 0.0), (-0.043, 0.170), (-0.043, -0.170)],
            maximizers: &[
                (
                    2,
                    &[
                        &[0.025, 0.301, 0.211, 0.463],
                        &[0.215, 0.369, 0.417, 0.000],
                        &[0.540, 0.000, 0.153, 0.307],
                        &[0.000, 0.694, 0.306, 0.000],
                    ],
                ),
                (
                    24,
                    &[
                        &[0.919, 0.000, 0.081, 0.000],
                        &[0.000, 0.906, 0.039, 0.055],
                        &[0.000, 0.108, 0.892, 0.000],
                        &[0.107, 0.000, 0.000, 0.893],
                    ],
                ),
                (
                    100,
                    &[
                        &[0.980, 0.000, 0.020, 0.000],
                        &[0.000, 0.976, 0.010, 0.014],
                        &[0.000, 0.028, 0.972, 0.000],
                        &[0.027, 0.000, 0.000, 0.973],
                    ],
                ),
            ],
            gradients: &[
                (
                    2,
                    &[
                        &[-0.069, -0.007, -0.041],
                        &[253.566, 253.544, 253.558],
                        &[0.047, -131.636, 0.007],
                        &[-73.725, 130.756, 130.749],
                    ],
                ),
                (
                    24,
                    &[
                        &[2645.061, 2380.088, 2645.052],
                        &[-562.497, -0.054, -0.080],
                        &[1381.186, 3325.479, 3325.464],
                        &[-0.012, -718.366, -626.450],
                    ],
                ),
                (
                    100,
                    &[
                        &[10188.296, 9246.027, 10188.303],
                        &[-2233.645, -0.002, -0.001],
                        &[4948.569, 12326.711, 12326.716],
                        &[-0.005, -2790.863, -2648.348],
                    ],
                ),
            ],
            top_fraction: &[(2, 0.125)],
            plateau_fraction: &[(2, 0.13)],
            real_root_count: None,
            principal_root: None,
            real_roots: NO_EXPECTED_ROOTS,
            frobenius_error: None,
        },
    },
];

/// All bundled fixtures, in study order.
pub fn all() -> &'static [StudyFixture] {
    STUDIES
}

pub fn by_name(name: &str) -> Result<&'static StudyFixture> {
    STUDIES
        .iter()
        .find(|f| f.name == name)
        .ok_or_else(|| Error::InvalidParam(format!("unknown fixture {name:?}")))
}
