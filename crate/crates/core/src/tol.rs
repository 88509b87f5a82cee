//! Centralized numeric tolerances.
//!
//! Every residual threshold used by the verification suites and the
//! acceptance gate lives here, so a tolerance is never tuned in one test
//! while a sibling test silently keeps an older value. Each constant
//! documents the regime it protects. Residuals are always dimensionless:
//! an absolute deviation divided by the natural scale of the identity under
//! test (largest entry magnitude, product of row norms, or a reference
//! evaluation), so the thresholds are comparable across system sizes.

/// Relative genericity guard: a bracket is treated as numerically zero when
/// its magnitude falls below this multiple of the bracket derivative at the
/// origin. Parameters tripping the guard are rejected, not regularized.
pub const GUARD_REL: f64 = 1e-12;

/// Absolute floor for interpolation-node denominators; below this the node
/// system is declared singular.
pub const NODE_DEGENERACY_ABS: f64 = 1e-12;

/// Oddness of the elementary bracket, f(-x) + f(x), relative to |f(x)|.
/// Pure series arithmetic, so only rounding noise is tolerated.
pub const THETA_ODDNESS: f64 = 1e-13;

/// Both quasiperiodicity relations of the elementary bracket.
pub const THETA_QUASIPERIOD: f64 = 1e-12;

/// Agreement between the elliptic series at huge Im(tau) and the hyperbolic
/// sine it degenerates to.
pub const THETA_TRIG_LIMIT: f64 = 1e-12;

/// Four-term addition rule residual, normalized by the largest of the three
/// bracket quadruple products.
pub const THETA_ADDITION: f64 = 1e-12;

/// Consistency of argument reduction: f(lambda) against multiplier times
/// f(reduced lambda). The multiplier can amplify rounding by a few digits
/// for arguments several cells away from the origin.
pub const THETA_REDUCE: f64 = 1e-11;

/// Bracket magnitude at lattice points, relative to the derivative at zero.
pub const THETA_LATTICE_ZERO: f64 = 1e-12;

/// Higher-order theta interpolation away from the nodes.
pub const THETA_INTERPOLATION: f64 = 1e-10;

/// Derivative of the bracket at zero against a centered finite difference.
pub const FP0_FINITE_DIFF: f64 = 1e-8;

/// Exact structural zeros of the vertex weight matrices (ice rule and its
/// transposed variant): these entries are never touched by arithmetic, so
/// the tolerance is essentially machine epsilon times a safety factor.
pub const ICE_RULE: f64 = 1e-14;

/// Local identities of the weight layer (dynamical Yang-Baxter, unitarity,
/// crossing, reflection), normalized by the largest matrix entry.
pub const LOCAL_IDENTITY: f64 = 1e-10;

/// Dependence of the unitarity scalar on the dynamical parameter (it must
/// have none).
pub const UNITARITY_SCALAR: f64 = 1e-12;

/// Exchange relations of the operator layer, normalized by the largest
/// entry of the left-hand side.
pub const ALGEBRA_RELATION: f64 = 1e-10;

/// Annihilation of the reference states by the off-diagonal single-row
/// blocks, relative to the operator norm scale.
pub const VACUUM_ANNIHILATION: f64 = 1e-13;

/// Closed-form eigenvalues on the reference states against the dense
/// operator action.
pub const VACUUM_EIGENVALUE: f64 = 1e-10;

/// Component of an operator-on-vacuum image orthogonal to the vacuum,
/// relative to the image norm.
pub const VACUUM_ORTHOGONAL: f64 = 1e-11;

/// Declared operator weight w against the commutator with the total spin
/// operator, relative to the operator scale.
pub const WEIGHT_BOOKKEEPING: f64 = 1e-12;

/// Agreement between the operator route and either symmetrized-sum route.
pub const ROUTE_AGREEMENT: f64 = 1e-9;

/// Agreement of the contour route with the exact routes. Quadrature error
/// is spectrally small but the integrand magnifies rounding near its poles.
pub const CONTOUR_AGREEMENT: f64 = 1e-6;

/// Change of the contour value when the node count is doubled.
pub const CONTOUR_DOUBLING: f64 = 1e-10;

/// Functional-equation residual divided by the largest single term.
pub const FUNCEQ_RESIDUAL: f64 = 1e-9;

/// Determinant of the swapped-argument coefficient matrix divided by the
/// product of its row max-norms.
pub const SWAPPED_DET: f64 = 1e-8;

/// Exact coefficient symmetries: transposition swap, crossing rescale, and
/// the collapse of the distinguished component at shifted inhomogeneities.
pub const COEFF_SYMMETRY: f64 = 1e-11;

/// Invariance of the partition function under permutations of the spectral
/// parameters (same summands, reordered accumulation).
pub const PERMUTATION_INVARIANCE: f64 = 1e-11;

/// Covariance of the partition function under the crossing substitution.
pub const CROSSING_COVARIANCE: f64 = 1e-10;

/// Vanishing at the special spectral-parameter pairs, relative to a nearby
/// generic evaluation.
pub const SPECIAL_ZERO: f64 = 1e-9;

/// Classification residuals (order and norm) of the pole-free partition
/// product as a finite-order theta in each spectral variable.
pub const ZBAR_CLASSIFICATION: f64 = 1e-8;

/// Classification residuals of the denominator-free coefficient functions
/// as finite-order thetas in the distinguished and ordinary variables.
pub const MBAR_CLASSIFICATION: f64 = 1e-8;

/// Two-point extrapolated pole residue against its closed form.
pub const RESIDUE_VALUE: f64 = 1e-6;

/// Reconstruction of the size-L partition function from size L-1 data.
pub const RECONSTRUCTION: f64 = 1e-8;

/// Spread of the componentwise ratio between the two reduced coefficient
/// vectors (they must agree up to one global factor).
pub const REDUCED_RATIO_SPREAD: f64 = 1e-10;

/// Residual of the reduced (length L-1) functional equation.
pub const REDUCED_FUNCEQ: f64 = 1e-8;

/// Factor by which the near-pole probe at the smallest epsilon may exceed
/// the probe at the largest epsilon while still counting as bounded.
pub const RESIDUE_BOUNDED_FACTOR: f64 = 10.0;
