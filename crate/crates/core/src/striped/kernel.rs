use super::lanes::{Cell, LaneVector};
use super::profile::StripedProfile;
use crate::scoring::GapModel;

/// Result of one striped score pass, in true (unbiased) score units.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) struct PassOutcome {
    pub score: u32,
    /// `(query_end, ref_end)` of the first best cell; `None` when the best
    /// score is 0 or the pass saturated.
    pub end: Option<(usize, usize)>,
    pub saturated: bool,
    /// Inner lazy-F iterations over the whole pass.
    pub lazy_f_steps: u64,
}

/// Striped Smith-Waterman score pass.
///
/// Per reference column the H, E and F vectors are swept once over the
/// segments; a lazy-F loop then carries vertical gaps across segment and
/// lane boundaries until no lane can still improve. Stored cells hold true
/// scores clamped at zero, which is exact for local alignment.
pub(crate) fn striped_pass<V: LaneVector>(
    profile: &StripedProfile<V::Cell>,
    reference: &[u8],
    gaps: GapModel,
) -> PassOutcome {
    let l = V::LANES;
    debug_assert_eq!(profile.lanes(), l);
    let s = profile.seg_len();
    let n = profile.query_len();
    let cell = |v: i32| V::Cell::from_u32(v.max(0) as u32);
    let v_open = V::splat(cell(gaps.gap_open));
    let v_ext = V::splat(cell(gaps.gap_extend));
    let v_bias = V::splat(cell(profile.bias() as i32));
    let ceiling = V::Cell::MAX.to_u32() - profile.bias();
    let v_near_ceiling = V::splat(V::Cell::from_u32(ceiling - 1));

    let mut h_load = vec![V::Cell::default(); s * l];
    let mut h_store = vec![V::Cell::default(); s * l];
    let mut e = vec![V::Cell::default(); s * l];
    let mut best = 0u32;
    let mut end = None;
    let mut lazy_f_steps = 0u64;

    for (j, &sym) in reference.iter().enumerate() {
        let col = profile.column(sym);
        let mut vf = V::zero();
        let mut vh = V::load(&h_store[(s - 1) * l..]).shift_in_zero();
        std::mem::swap(&mut h_load, &mut h_store);
        let mut vmax = V::zero();

        let rows =
            col.chunks_exact(l).zip(h_store.chunks_exact_mut(l)).zip(e.chunks_exact_mut(l)).zip(h_load.chunks_exact(l));
        for (((sc, hs), es), hl) in rows {
            vh = vh.adds(V::load(sc)).subs(v_bias);
            let ve = V::load(es);
            vh = vh.max(ve).max(vf);
            vmax = vmax.max(vh);
            vh.store(hs);
            let h_open = vh.subs(v_open);
            ve.subs(v_ext).max(h_open).store(es);
            vf = vf.subs(v_ext).max(h_open);
            vh = V::load(hl);
        }

        let mut c = vf.shift_in_zero();
        let mut passes = 0;
        'lazy: loop {
            for (hs, es) in h_store.chunks_exact_mut(l).zip(e.chunks_exact_mut(l)) {
                let h_old = V::load(hs);
                if !(c.any_gt(h_old) || c.subs(v_ext).any_gt(h_old.subs(v_open))) {
                    break 'lazy;
                }
                lazy_f_steps += 1;
                let h_new = h_old.max(c);
                h_new.store(hs);
                vmax = vmax.max(h_new);
                V::load(es).max(h_new.subs(v_open)).store(es);
                c = c.subs(v_ext);
            }
            c = c.shift_in_zero();
            passes += 1;
            assert!(passes <= l, "lazy-F did not converge within {l} passes");
        }

        if vmax.any_gt(v_near_ceiling) {
            return PassOutcome { score: ceiling, end: None, saturated: true, lazy_f_steps };
        }
        if vmax.any_gt(V::splat(V::Cell::from_u32(best))) {
            // Pad positions never exceed the real ones, so scan real positions
            // in query order for the first maximum.
            let mut col_best = best;
            let mut arg = None;
            for p in 0..n {
                let v = h_store[(p % s) * l + p / s].to_u32();
                if v > col_best {
                    col_best = v;
                    arg = Some(p);
                }
            }
            if let Some(p) = arg {
                best = col_best;
                end = Some((p, j));
            }
        }
    }
    PassOutcome { score: best, end, saturated: false, lazy_f_steps }
}
