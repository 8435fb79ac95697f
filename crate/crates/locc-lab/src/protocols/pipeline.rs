//! Shared tail of the remote-preparation protocols: after the first stage
//! has put the signal amplitudes on the diagonal of the shared pairs, both
//! parties compress to the code space, one Fourier-basis message transfers
//! the sender's share, and the receiver decompresses.

use crate::locc::{LoccSession, Party, RegisterId};
use crate::qcore::PROB_FLOOR;
use crate::typspace::{schumacher_compress, schumacher_decompress, Codebook};

use super::teleport::fourier_stage;
use super::{ProtocolError, ProtocolResult};

/// Result of one pipeline pass. On abort the receiver's registers are gone
/// and the branch counts as failed; otherwise `bob_registers` holds the
/// receiver's reconstructed registers in signal order.
pub(crate) struct TransferOutcome {
    pub aborted: bool,
    pub bob_registers: Vec<RegisterId>,
}

/// Codebook over the letters the source actually emits. Letters of
/// probability at or below the pruning floor never appear in the shared
/// pairs, so the code space is built over the live alphabet alone; the
/// returned list maps live ranks back to universe labels.
pub(crate) fn support_codebook(
    source: &[f64],
    n: usize,
    delta: f64,
) -> ProtocolResult<(Vec<usize>, Codebook)> {
    let live: Vec<usize> = (0..source.len())
        .filter(|&l| source[l] > PROB_FLOOR)
        .collect();
    if live.len() < 2 {
        return Err(ProtocolError::DegenerateSupport { live: live.len() });
    }
    let q: Vec<f64> = if live.len() == source.len() {
        source.to_vec()
    } else {
        let live_sum: f64 = live.iter().map(|&l| source[l]).sum();
        live.iter().map(|&l| source[l] / live_sum).collect()
    };
    Ok((live, Codebook::from_source(&q, n, delta)?))
}

/// Compresses the sender's halves, moves the code register to the receiver
/// with one Fourier-basis measurement and one message of domain D, and
/// decompresses on the receiver's side. The message is sent on the abort
/// path too, so the metered schedule is outcome independent.
///
/// `source` is the per-label weight of the shared diagonal; `alice_ids` and
/// `bob_ids` pair up in signal order.
pub(crate) fn compress_and_transfer(
    s: &mut LoccSession,
    alice_ids: &[RegisterId],
    bob_ids: &[RegisterId],
    source: &[f64],
    delta: f64,
) -> Result<TransferOutcome, ProtocolError> {
    let n = alice_ids.len();
    let (live, codebook) = support_codebook(source, n, delta)?;
    let restrict = live.len() < source.len();
    let d = codebook.len();

    let mut a_regs = alice_ids.to_vec();
    let mut b_regs = bob_ids.to_vec();
    if restrict {
        let down = |value: usize| live.binary_search(&value).ok();
        for reg in &mut a_regs {
            *reg = s.local_relabel(Party::Alice, &[*reg], live.len(), &down)?;
        }
        for reg in &mut b_regs {
            *reg = s.local_relabel(Party::Bob, &[*reg], live.len(), &down)?;
        }
    }

    let (ok, comp_a) = schumacher_compress(s, Party::Alice, &a_regs, &codebook)?;
    if !ok {
        // Fixed message schedule: the abort branch pays the same bits.
        s.send(Party::Alice, Party::Bob, 0, d)?;
        return Ok(TransferOutcome {
            aborted: true,
            bob_registers: Vec::new(),
        });
    }
    let comp_a = comp_a.expect("compression succeeded");

    let (ok, comp_b) = schumacher_compress(s, Party::Bob, &b_regs, &codebook)?;
    if !ok {
        // Unreachable in exact arithmetic: after the sender's projection the
        // joint support lies inside code space x code space. Kept as an
        // abort so a floating-point surprise degrades instead of panicking.
        s.send(Party::Alice, Party::Bob, 0, d)?;
        return Ok(TransferOutcome {
            aborted: true,
            bob_registers: Vec::new(),
        });
    }
    let comp_b = comp_b.expect("compression succeeded");

    fourier_stage(s, comp_a, comp_b, d)?;

    let mut out = schumacher_decompress(s, Party::Bob, comp_b, &codebook)?;
    if restrict {
        let up = |rank: usize| live.get(rank).copied();
        for reg in &mut out {
            *reg = s.local_relabel(Party::Bob, &[*reg], source.len(), &up)?;
        }
    }
    Ok(TransferOutcome {
        aborted: false,
        bob_registers: out,
    })
}
