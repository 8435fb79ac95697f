use super::{Codebook, TypspaceError, TypspaceResult};
use crate::locc::{LoccSession, Party, RegisterId};

fn check_alphabet(
    session: &LoccSession,
    ids: &[RegisterId],
    codebook: &Codebook,
) -> TypspaceResult<()> {
    if ids.len() != codebook.n() {
        return Err(TypspaceError::RegisterCount {
            expected: codebook.n(),
            got: ids.len(),
        });
    }
    for &id in ids {
        let dim = session
            .registers()
            .iter()
            .find(|r| r.id == id)
            .map(|r| r.dim)
            .unwrap_or(0);
        if dim != codebook.alphabet() {
            return Err(TypspaceError::AlphabetMismatch {
                expected: codebook.alphabet(),
                got: dim,
            });
        }
    }
    if codebook.len() < 2 {
        return Err(TypspaceError::DegenerateCodebook {
            size: codebook.len(),
        });
    }
    Ok(())
}

/// Quantum data compression of n same-dimension registers.
///
/// Measures {typical, atypical} as a coarse projective measurement. On the
/// typical outcome, relabels the typical basis strings onto a fresh
/// register of dimension D = |codebook| and returns it; on the atypical
/// outcome returns (false, None) and leaves the collapsed registers in
/// place for the caller's abort handling.
pub fn schumacher_compress(
    session: &mut LoccSession,
    party: Party,
    ids: &[RegisterId],
    codebook: &Codebook,
) -> TypspaceResult<(bool, Option<RegisterId>)> {
    check_alphabet(session, ids, codebook)?;
    let class = |v: usize| usize::from(codebook.encode_index(v).is_some());
    let outcome = session.local_measure_coarse(party, ids, &class, 2)?;
    if outcome == 0 {
        return Ok((false, None));
    }
    let reg = session.local_relabel(party, ids, codebook.len(), &|v| codebook.encode_index(v))?;
    Ok((true, Some(reg)))
}

/// Inverse of compression: maps code indices back to their basis strings
/// and splits the result into the original n registers.
pub fn schumacher_decompress(
    session: &mut LoccSession,
    party: Party,
    id: RegisterId,
    codebook: &Codebook,
) -> TypspaceResult<Vec<RegisterId>> {
    let dim = session
        .registers()
        .iter()
        .find(|r| r.id == id)
        .map(|r| r.dim)
        .unwrap_or(0);
    if dim != codebook.len() {
        return Err(TypspaceError::AlphabetMismatch {
            expected: codebook.len(),
            got: dim,
        });
    }
    let full = codebook.alphabet().pow(codebook.n() as u32);
    let wide = session.local_relabel(party, &[id], full, &|w| codebook.decode_index(w))?;
    let parts = vec![codebook.alphabet(); codebook.n()];
    Ok(session.split_register(wide, &parts)?)
}
