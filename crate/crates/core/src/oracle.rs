//! Brute-force reference scorers.
//!
//! These share no code with the scoring engine in [`crate::filter`]; they
//! restate the score definitions as explicit scans and enumerations so that
//! agreement between the two paths is evidence rather than tautology. They
//! are exponential and guarded accordingly.

use crate::error::{Error, Result};
use crate::filter::WindowView;
use crate::types::PhoneId;

/// Largest window (frames) `brute_soc` will enumerate.
pub const MAX_FRAMES: usize = 12;
/// Longest phone sequence `brute_soc` will enumerate.
pub const MAX_PHONES: usize = 6;

fn check_phones(window: &WindowView<'_>, phones: &[PhoneId]) -> Result<()> {
    if phones.is_empty() {
        return Err(Error::EmptyPhoneSequence);
    }
    for &phone in phones {
        if phone.index() >= window.num_phones() {
            return Err(Error::PhoneOutOfRange {
                phone: phone.0,
                inventory: window.num_phones(),
            });
        }
    }
    Ok(())
}

/// Order-insensitive score: per-phone column maxima found by explicit scan,
/// summed in ascending phone-id order and divided by the sequence length.
pub fn brute_psc(window: &WindowView<'_>, phones: &[PhoneId]) -> Result<f64> {
    check_phones(window, phones)?;
    if window.frames() == 0 {
        return Ok(0.0);
    }
    let mut ordered: Vec<PhoneId> = phones.to_vec();
    ordered.sort_unstable();
    let mut sum = 0.0;
    for phone in ordered {
        let mut best = 0.0f64;
        for t in 0..window.frames() {
            let p = window.prob(t, phone);
            if p > best {
                best = p;
            }
        }
        sum += best;
    }
    Ok(sum / phones.len() as f64)
}

/// Order-sensitive score: enumerates every strictly increasing frame tuple
/// (t_0 < t_1 < ... ) of the sequence length and returns the best mean of
/// matched posteriors; 0 when no tuple exists.
pub fn brute_soc(window: &WindowView<'_>, phones: &[PhoneId]) -> Result<f64> {
    check_phones(window, phones)?;
    let frames = window.frames();
    if frames > MAX_FRAMES || phones.len() > MAX_PHONES {
        return Err(Error::OracleGuard {
            detail: format!(
                "instance {}x{} exceeds {MAX_FRAMES} frames / {MAX_PHONES} phones",
                frames,
                phones.len()
            ),
        });
    }
    if phones.len() > frames {
        return Ok(0.0);
    }

    fn recurse(
        window: &WindowView<'_>,
        phones: &[PhoneId],
        next_phone: usize,
        first_frame: usize,
        partial: f64,
        best: &mut f64,
    ) {
        if next_phone == phones.len() {
            if partial > *best {
                *best = partial;
            }
            return;
        }
        let remaining = phones.len() - next_phone;
        // Leave room for the phones still to be placed.
        for t in first_frame..=window.frames() - remaining {
            let sum = partial + window.prob(t, phones[next_phone]);
            recurse(window, phones, next_phone + 1, t + 1, sum, best);
        }
    }

    let mut best = f64::NEG_INFINITY;
    recurse(window, phones, 0, 0, 0.0, &mut best);
    Ok(best / phones.len() as f64)
}
