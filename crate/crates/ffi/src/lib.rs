//! C ABI for the trojan-game solver.
//!
//! Games and learning results are opaque handles created by `tg_*_new` style
//! functions and released with the matching `*_free`. Every fallible call
//! returns a [`TgStatus`]; on failure the message is kept per thread and can
//! be read with [`tg_last_error_message`]. Output arrays are caller-owned and
//! must be at least as long as the reported dimension.

use std::cell::RefCell;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use trojan_game::analysis::{self, ThresholdOptions};
use trojan_game::fictitious_play::{self, DEFAULT_CHECKPOINT_GAP, DEFAULT_CONVERGENCE_M, DEFAULT_MAX_ITERATIONS};
use trojan_game::{BehaviorModel, EquilibriumResult, Error, FpConfig, GameSpec, PayoffMatrix};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TgStatus {
    Ok = 0,
    InvalidGame = 1,
    InvalidStrategy = 2,
    ProbabilityOutOfRange = 3,
    AlphaOutOfRange = 4,
    DimensionMismatch = 5,
    UnknownStrategy = 6,
    RankDeficient = 7,
    ReducedSupport = 8,
    EmptyFamily = 9,
    NoRootInBracket = 10,
    InvalidConfig = 11,
    Scenario = 12,
    Io = 13,
    NullPointer = 14,
    BufferTooSmall = 15,
    Panic = 16,
}

impl From<&Error> for TgStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::InvalidGame(_) => TgStatus::InvalidGame,
            Error::InvalidStrategy(_) => TgStatus::InvalidStrategy,
            Error::ProbabilityOutOfRange(_) => TgStatus::ProbabilityOutOfRange,
            Error::AlphaOutOfRange(_) => TgStatus::AlphaOutOfRange,
            Error::DimensionMismatch { .. } => TgStatus::DimensionMismatch,
            Error::UnknownStrategy(_) => TgStatus::UnknownStrategy,
            Error::RankDeficient { .. } => TgStatus::RankDeficient,
            Error::ReducedSupport(_) => TgStatus::ReducedSupport,
            Error::EmptyFamily(_) => TgStatus::EmptyFamily,
            Error::NoRootInBracket { .. } => TgStatus::NoRootInBracket,
            Error::InvalidConfig(_) => TgStatus::InvalidConfig,
            Error::Scenario(_) => TgStatus::Scenario,
            Error::Io(_) => TgStatus::Io,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TgModelKind {
    Eut = 0,
    Pt = 1,
}

/// Behavioral model. The alphas are ignored for `TG_MODEL_KIND_EUT`.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct TgModel {
    pub kind: TgModelKind,
    pub alpha_d: f64,
    pub alpha_a: f64,
}

/// Learning options. Initial beliefs are the defaults for the game.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct TgFpOptions {
    pub model: TgModel,
    /// `M`; learning stops once beliefs move less than `1/M` over a checkpoint gap.
    pub convergence_m: f64,
    pub checkpoint_gap: u64,
    pub max_iterations: u64,
}

/// A validated game and its payoff matrix.
pub struct TgGame {
    spec: GameSpec,
    m_a: PayoffMatrix,
}

/// Result of a fictitious-play run.
pub struct TgEquilibrium {
    inner: EquilibriumResult,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

struct Failure(TgStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(TgStatus::from(&e), e.to_string())
    }
}

fn null(name: &str) -> Failure {
    Failure(TgStatus::NullPointer, format!("`{name}` is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> TgStatus {
    let (status, msg) = match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => (TgStatus::Ok, String::new()),
        Ok(Err(Failure(s, m))) => (s, m),
        Err(p) => {
            let m = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".to_string());
            (TgStatus::Panic, m)
        }
    };
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
    status
}

unsafe fn input<'a>(p: *const f64, len: usize, name: &str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(name));
    }
    Ok(slice::from_raw_parts(p, len))
}

unsafe fn output<'a>(p: *mut f64, len: usize, needed: usize, name: &str) -> Result<&'a mut [f64], Failure> {
    if len < needed {
        return Err(Failure(
            TgStatus::BufferTooSmall,
            format!("`{name}` holds {len} values, {needed} needed"),
        ));
    }
    if p.is_null() {
        return Err(null(name));
    }
    Ok(slice::from_raw_parts_mut(p, needed))
}

unsafe fn write<T>(p: *mut T, v: T, name: &str) -> Result<(), Failure> {
    if p.is_null() {
        return Err(null(name));
    }
    p.write(v);
    Ok(())
}

unsafe fn game<'a>(g: *const TgGame) -> Result<&'a TgGame, Failure> {
    g.as_ref().ok_or_else(|| null("game"))
}

unsafe fn equilibrium<'a>(e: *const TgEquilibrium) -> Result<&'a EquilibriumResult, Failure> {
    e.as_ref().map(|e| &e.inner).ok_or_else(|| null("equilibrium"))
}

fn model(m: &TgModel) -> Result<BehaviorModel, Failure> {
    match m.kind {
        TgModelKind::Eut => Ok(BehaviorModel::Eut),
        TgModelKind::Pt => Ok(BehaviorModel::pt(m.alpha_d, m.alpha_a)?),
    }
}

/// Copies the calling thread's last error message into `buf` as a
/// NUL-terminated string, truncating if needed. Returns the message length in
/// bytes, without the terminator.
///
/// # Safety
/// `buf` must be null or valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn tg_last_error_message(buf: *mut u8, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr(), buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Creates a game with `n` trojan types labelled `A`, `B`, ... and a test
/// budget `k`.
///
/// # Safety
/// `damages` and `fines` must be valid for `n` values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tg_game_new(
    damages: *const f64,
    fines: *const f64,
    n: usize,
    k: usize,
    out: *mut *mut TgGame,
) -> TgStatus {
    guard(|| {
        let damages = input(damages, n, "damages")?;
        let fines = input(fines, n, "fines")?;
        if n > 26 {
            return Err(Failure(TgStatus::InvalidGame, format!("at most 26 trojan types, got {n}")));
        }
        let trojans = damages
            .iter()
            .zip(fines)
            .enumerate()
            .map(|(i, (&v, &f))| trojan_game::Trojan::new(((b'A' + i as u8) as char).to_string(), v, f))
            .collect();
        let spec = GameSpec::new(trojans, k)?;
        let m_a = spec.payoff_matrix();
        write(out, Box::into_raw(Box::new(TgGame { spec, m_a })), "out")
    })
}

/// The four-trojan case study (damages 1, 2, 4, 12; two tests) with a uniform fine.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tg_game_paper_case(fine: f64, out: *mut *mut TgGame) -> TgStatus {
    guard(|| {
        let spec = GameSpec::paper_case(fine)?;
        let m_a = spec.payoff_matrix();
        write(out, Box::into_raw(Box::new(TgGame { spec, m_a })), "out")
    })
}

/// # Safety
/// `game` must be null or a handle from this library that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn tg_game_free(game: *mut TgGame) {
    if !game.is_null() {
        drop(Box::from_raw(game));
    }
}

/// Number of defender strategies (rows) and attacker strategies (columns).
///
/// # Safety
/// `game` must be a live handle; the outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn tg_game_dims(game: *const TgGame, num_defender: *mut usize, num_attacker: *mut usize) -> TgStatus {
    guard(|| {
        let g = self::game(game)?;
        write(num_defender, g.m_a.num_defender(), "num_defender")?;
        write(num_attacker, g.m_a.num_attacker(), "num_attacker")
    })
}

/// Defender utilities, row-major with one row per defender subset in
/// lexicographic order.
///
/// # Safety
/// `game` must be a live handle; `out` must be valid for `len` values.
#[no_mangle]
pub unsafe extern "C" fn tg_game_payoff_matrix(game: *const TgGame, out: *mut f64, len: usize) -> TgStatus {
    guard(|| {
        let g = self::game(game)?;
        let m = g.m_a.defender_utilities().as_slice();
        output(out, len, m.len(), "out")?.copy_from_slice(m);
        Ok(())
    })
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tg_prelec_weight(p: f64, alpha: f64, out: *mut f64) -> TgStatus {
    guard(|| write(out, trojan_game::prelec_weight(p, alpha)?, "out"))
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tg_prelec_inverse(q: f64, alpha: f64, out: *mut f64) -> TgStatus {
    guard(|| write(out, trojan_game::prelec_inverse(q, alpha)?, "out"))
}

/// Defaults: expected utility, `M = 1000`, checkpoint gap 1000, at most
/// 10^7 iterations.
#[no_mangle]
pub extern "C" fn tg_fp_options_default() -> TgFpOptions {
    TgFpOptions {
        model: TgModel {
            kind: TgModelKind::Eut,
            alpha_d: 1.0,
            alpha_a: 1.0,
        },
        convergence_m: DEFAULT_CONVERGENCE_M,
        checkpoint_gap: DEFAULT_CHECKPOINT_GAP,
        max_iterations: DEFAULT_MAX_ITERATIONS,
    }
}

/// Runs fictitious play. `options` may be null for the defaults.
///
/// # Safety
/// `game` must be a live handle, `options` null or readable, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tg_fictitious_play(
    game: *const TgGame,
    options: *const TgFpOptions,
    out: *mut *mut TgEquilibrium,
) -> TgStatus {
    guard(|| {
        let g = self::game(game)?;
        let opts = options.as_ref().copied().unwrap_or_else(|| tg_fp_options_default());
        let mut cfg = FpConfig::for_spec(&g.spec, model(&opts.model)?);
        cfg.convergence_m = opts.convergence_m;
        cfg.checkpoint_gap = opts.checkpoint_gap;
        cfg.max_iterations = opts.max_iterations;
        let inner = fictitious_play::run(&g.spec, &cfg)?;
        write(out, Box::into_raw(Box::new(TgEquilibrium { inner })), "out")
    })
}

/// # Safety
/// `eq` must be null or a handle from this library that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn tg_equilibrium_free(eq: *mut TgEquilibrium) {
    if !eq.is_null() {
        drop(Box::from_raw(eq));
    }
}

/// Copies the defender and attacker strategies.
///
/// # Safety
/// `eq` must be a live handle; the buffers must be valid for their lengths.
#[no_mangle]
pub unsafe extern "C" fn tg_equilibrium_strategies(
    eq: *const TgEquilibrium,
    p_d: *mut f64,
    len_d: usize,
    p_a: *mut f64,
    len_a: usize,
) -> TgStatus {
    guard(|| {
        let r = equilibrium(eq)?;
        output(p_d, len_d, r.p_d_star.len(), "p_d")?.copy_from_slice(r.p_d_star.probs());
        output(p_a, len_a, r.p_a_star.len(), "p_a")?.copy_from_slice(r.p_a_star.probs());
        Ok(())
    })
}

/// Objective game value and the utilities each player perceives.
///
/// # Safety
/// `eq` must be a live handle; the outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn tg_equilibrium_value(
    eq: *const TgEquilibrium,
    objective: *mut f64,
    perceived_d: *mut f64,
    perceived_a: *mut f64,
) -> TgStatus {
    guard(|| {
        let v = equilibrium(eq)?.value;
        write(objective, v.objective, "objective")?;
        write(perceived_d, v.perceived_d, "perceived_d")?;
        write(perceived_a, v.perceived_a, "perceived_a")
    })
}

/// Iteration count and whether the belief criterion was met.
///
/// # Safety
/// `eq` must be a live handle; the outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn tg_equilibrium_status(
    eq: *const TgEquilibrium,
    iterations: *mut u64,
    converged: *mut bool,
) -> TgStatus {
    guard(|| {
        let r = equilibrium(eq)?;
        write(iterations, r.iterations, "iterations")?;
        write(converged, r.converged, "converged")
    })
}

/// Indifference residuals, each the larger of spread and violation.
///
/// # Safety
/// `eq` must be a live handle; the outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn tg_equilibrium_residuals(
    eq: *const TgEquilibrium,
    residual_d: *mut f64,
    residual_a: *mut f64,
) -> TgStatus {
    guard(|| {
        let r = equilibrium(eq)?;
        write(residual_d, r.residual_d.value(), "residual_d")?;
        write(residual_a, r.residual_a.value(), "residual_a")
    })
}

/// Full-support expected-utility attacker equilibrium.
///
/// # Safety
/// `game` must be a live handle; `p_a` must be valid for `len` values.
#[no_mangle]
pub unsafe extern "C" fn tg_attacker_msne_eut(game: *const TgGame, p_a: *mut f64, len: usize) -> TgStatus {
    guard(|| {
        let g = self::game(game)?;
        let s = analysis::attacker_msne_eut(&g.m_a)?;
        output(p_a, len, s.len(), "p_a")?.copy_from_slice(s.probs());
        Ok(())
    })
}

/// Attacker equilibrium when the defender weights probabilities with `alpha_d`.
///
/// # Safety
/// `game` must be a live handle; `p_a` must be valid for `len` values.
#[no_mangle]
pub unsafe extern "C" fn tg_pt_attacker_msne(game: *const TgGame, alpha_d: f64, p_a: *mut f64, len: usize) -> TgStatus {
    guard(|| {
        let g = self::game(game)?;
        let s = analysis::pt_attacker_msne(&g.m_a, alpha_d)?;
        output(p_a, len, s.len(), "p_a")?.copy_from_slice(s.probs());
        Ok(())
    })
}

/// Numerical rank of the payoff matrix.
///
/// # Safety
/// `game` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tg_matrix_rank(game: *const TgGame, out: *mut usize) -> TgStatus {
    guard(|| {
        let g = self::game(game)?;
        write(out, analysis::matrix_rank(g.m_a.defender_utilities(), None), "out")
    })
}

/// Uniform fine in `[lo, hi]` at which the expected-utility game value is
/// zero, and the attacker strategy there. Damages are taken from `game`.
///
/// # Safety
/// `game` must be a live handle; `fine` writable; `p_a` null or valid for `len` values.
#[no_mangle]
pub unsafe extern "C" fn tg_eut_fine_threshold(
    game: *const TgGame,
    lo: f64,
    hi: f64,
    fine: *mut f64,
    p_a: *mut f64,
    len: usize,
) -> TgStatus {
    guard(|| {
        let g = self::game(game)?;
        let opts = ThresholdOptions {
            bracket: (lo, hi),
            ..ThresholdOptions::default()
        };
        let r = analysis::fine_threshold(&g.spec, &BehaviorModel::Eut, &opts)?;
        if !p_a.is_null() {
            output(p_a, len, r.p_a_at_threshold.len(), "p_a")?.copy_from_slice(r.p_a_at_threshold.probs());
        }
        write(fine, r.f_value, "fine")
    })
}
