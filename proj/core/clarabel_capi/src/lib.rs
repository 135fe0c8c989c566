//! Minimal C ABI around the Clarabel conic solver.
//!
//! The caller provides the problem in Clarabel's native form
//!     min 0.5 x'Px + q'x   s.t.  Ax + s = b,  s in K
//! with P (upper triangle) and A in CSC layout. Cone kinds:
//! 0 = zero, 1 = nonnegative, 2 = second order, 3 = PSD triangle.

use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettingsBuilder, DefaultSolver, IPSolver, SolverStatus, SupportedConeT,
};
use std::slice;

#[repr(C)]
pub struct DmpcClarabelSettings {
    pub feas_tol: f64,
    pub gap_tol: f64,
    pub max_iter: u32,
    pub time_limit: f64, // seconds, 0 = none
    pub verbose: i32,
    pub chordal: i32,
}

pub const STATUS_SOLVED: i32 = 0;
pub const STATUS_PRIMAL_INFEASIBLE: i32 = 1;
pub const STATUS_DUAL_INFEASIBLE: i32 = 2;
pub const STATUS_MAX_ITERATIONS: i32 = 3;
pub const STATUS_MAX_TIME: i32 = 4;
pub const STATUS_ALMOST_SOLVED: i32 = 5;
pub const STATUS_NUMERICAL: i32 = 6;
pub const STATUS_BAD_INPUT: i32 = 7;

fn csc_from_raw(
    nrows: usize,
    ncols: usize,
    colptr: *const usize,
    rowval: *const usize,
    nzval: *const f64,
) -> Option<CscMatrix<f64>> {
    unsafe {
        if colptr.is_null() {
            return None;
        }
        let cp = slice::from_raw_parts(colptr, ncols + 1).to_vec();
        let nnz = cp[ncols];
        let rv = if nnz > 0 {
            slice::from_raw_parts(rowval, nnz).to_vec()
        } else {
            Vec::new()
        };
        let nv = if nnz > 0 {
            slice::from_raw_parts(nzval, nnz).to_vec()
        } else {
            Vec::new()
        };
        Some(CscMatrix::new(nrows, ncols, cp, rv, nv))
    }
}

/// Solve one conic program. Returns a STATUS_* code; x/z/s are written on
/// any terminal status that carries an iterate.
///
/// # Safety
/// All pointers must reference buffers of the documented sizes.
#[no_mangle]
pub unsafe extern "C" fn dmpc_clarabel_solve(
    n: usize,
    m: usize,
    p_colptr: *const usize,
    p_rowval: *const usize,
    p_nzval: *const f64,
    q: *const f64,
    a_colptr: *const usize,
    a_rowval: *const usize,
    a_nzval: *const f64,
    b: *const f64,
    n_cones: usize,
    cone_kinds: *const i32,
    cone_dims: *const usize,
    settings: *const DmpcClarabelSettings,
    x_out: *mut f64,
    z_out: *mut f64,
    s_out: *mut f64,
    obj_out: *mut f64,
    iters_out: *mut u32,
    solve_time_out: *mut f64,
) -> i32 {
    let result = std::panic::catch_unwind(|| {
        let p = match csc_from_raw(n, n, p_colptr, p_rowval, p_nzval) {
            Some(mat) => mat,
            None => CscMatrix::zeros((n, n)),
        };
        let a = match csc_from_raw(m, n, a_colptr, a_rowval, a_nzval) {
            Some(mat) => mat,
            None => CscMatrix::zeros((m, n)),
        };
        let qv = slice::from_raw_parts(q, n).to_vec();
        let bv = slice::from_raw_parts(b, m).to_vec();

        let kinds = slice::from_raw_parts(cone_kinds, n_cones);
        let dims = slice::from_raw_parts(cone_dims, n_cones);
        let mut cones: Vec<SupportedConeT<f64>> = Vec::with_capacity(n_cones);
        for i in 0..n_cones {
            let d = dims[i];
            match kinds[i] {
                0 => cones.push(SupportedConeT::ZeroConeT(d)),
                1 => cones.push(SupportedConeT::NonnegativeConeT(d)),
                2 => cones.push(SupportedConeT::SecondOrderConeT(d)),
                3 => cones.push(SupportedConeT::PSDTriangleConeT(d)),
                _ => return STATUS_BAD_INPUT,
            }
        }

        let s = &*settings;
        let mut builder = DefaultSettingsBuilder::default();
        builder
            .verbose(s.verbose != 0)
            .tol_feas(s.feas_tol)
            .tol_gap_abs(s.gap_tol)
            .tol_gap_rel(s.gap_tol)
            .chordal_decomposition_enable(s.chordal != 0);
        if s.max_iter > 0 {
            builder.max_iter(s.max_iter);
        }
        if s.time_limit > 0.0 {
            builder.time_limit(s.time_limit);
        }
        let settings = match builder.build() {
            Ok(st) => st,
            Err(_) => return STATUS_BAD_INPUT,
        };

        let mut solver = match DefaultSolver::new(&p, &qv, &a, &bv, &cones, settings) {
            Ok(sv) => sv,
            Err(_) => return STATUS_BAD_INPUT,
        };
        solver.solve();

        let sol = &solver.solution;
        if !x_out.is_null() {
            let xs = slice::from_raw_parts_mut(x_out, n);
            xs.copy_from_slice(&sol.x);
        }
        if !z_out.is_null() {
            let zs = slice::from_raw_parts_mut(z_out, m);
            zs.copy_from_slice(&sol.z);
        }
        if !s_out.is_null() {
            let ss = slice::from_raw_parts_mut(s_out, m);
            ss.copy_from_slice(&sol.s);
        }
        if !obj_out.is_null() {
            *obj_out = sol.obj_val;
        }
        if !iters_out.is_null() {
            *iters_out = sol.iterations;
        }
        if !solve_time_out.is_null() {
            *solve_time_out = sol.solve_time;
        }

        match sol.status {
            SolverStatus::Solved => STATUS_SOLVED,
            SolverStatus::PrimalInfeasible => STATUS_PRIMAL_INFEASIBLE,
            SolverStatus::DualInfeasible => STATUS_DUAL_INFEASIBLE,
            SolverStatus::AlmostSolved => STATUS_ALMOST_SOLVED,
            SolverStatus::AlmostPrimalInfeasible => STATUS_PRIMAL_INFEASIBLE,
            SolverStatus::AlmostDualInfeasible => STATUS_DUAL_INFEASIBLE,
            SolverStatus::MaxIterations => STATUS_MAX_ITERATIONS,
            SolverStatus::MaxTime => STATUS_MAX_TIME,
            _ => STATUS_NUMERICAL,
        }
    });
    result.unwrap_or(STATUS_NUMERICAL)
}
