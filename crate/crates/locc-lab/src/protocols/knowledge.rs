//! Split of protocol parameters by who may read them. The sender holds the
//! full record; the receiver's view exposes only the shared part, so a
//! protocol that peeks at sender-only data through the wrong view fails at
//! run time instead of silently cheating.

use crate::locc::Party;

use super::{ProtocolError, ProtocolResult};

/// Parameter record split into a part both parties know and a part private
/// to the sender.
#[derive(Debug, Clone)]
pub struct KnowledgeSpec<S, P> {
    shared: S,
    sender_only: P,
}

impl<S, P> KnowledgeSpec<S, P> {
    pub fn new(shared: S, sender_only: P) -> Self {
        Self { shared, sender_only }
    }

    /// The named party's window onto the record.
    pub fn view(&self, party: Party) -> PartyView<'_, S, P> {
        PartyView { spec: self, party }
    }
}

/// Access-checked read handle for one party.
#[derive(Debug, Clone, Copy)]
pub struct PartyView<'a, S, P> {
    spec: &'a KnowledgeSpec<S, P>,
    party: Party,
}

impl<'a, S, P> PartyView<'a, S, P> {
    pub fn party(&self) -> Party {
        self.party
    }

    pub fn shared(&self) -> &'a S {
        &self.spec.shared
    }

    /// Sender-only fields. Errors for the receiver.
    pub fn private(&self) -> ProtocolResult<&'a P> {
        if self.party == Party::Alice {
            Ok(&self.spec.sender_only)
        } else {
            Err(ProtocolError::KnowledgeViolation { party: self.party })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn receiver_cannot_read_sender_fields() {
        let spec = KnowledgeSpec::new("both", vec![0.25f64]);
        assert_eq!(*spec.view(Party::Bob).shared(), "both");
        assert!(matches!(
            spec.view(Party::Bob).private(),
            Err(ProtocolError::KnowledgeViolation { party: Party::Bob })
        ));
        assert_eq!(spec.view(Party::Alice).private().unwrap(), &vec![0.25f64]);
    }
}
