use std::collections::BTreeMap;
use std::hash::Hasher;

use floquet_ratchet::DriveParams;
use fnv::FnvHasher;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ResultKind {
    Tac,
    LambdaC,
    OmegaC,
    AsymptoticCurrent,
    Xi,
    Cutoff,
}

impl ResultKind {
    pub fn label(self) -> &'static str {
        match self {
            ResultKind::Tac => "tac",
            ResultKind::LambdaC => "lambda_c",
            ResultKind::OmegaC => "omega_c",
            ResultKind::AsymptoticCurrent => "asymptotic_current",
            ResultKind::Xi => "xi",
            ResultKind::Cutoff => "cutoff",
        }
    }
}

/// One evaluated grid point. Failed points keep `value = NaN` and the error text.
#[derive(Clone, Debug, PartialEq)]
pub struct ScanRecord {
    pub index: usize,
    pub params: DriveParams,
    pub key: String,
    pub result_kind: ResultKind,
    pub value: f64,
    pub converged: bool,
    pub diagnostics: BTreeMap<String, f64>,
    pub error: Option<String>,
}

/// FNV-1a over the result kind and the bit patterns of every drive parameter.
pub fn record_key(params: &DriveParams, kind: ResultKind) -> String {
    let mut h = FnvHasher::default();
    h.write(kind.label().as_bytes());
    for x in [params.k, params.lambda, params.omega, params.phi, params.g] {
        h.write_u64(x.to_bits());
    }
    format!("{:016x}", h.finish())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn key_depends_on_every_field() {
        let p = DriveParams::new(0.1, 0.5, 1.0).unwrap();
        let base = record_key(&p, ResultKind::Tac);
        assert_eq!(base, record_key(&p, ResultKind::Tac));
        assert_eq!(base.len(), 16);
        let variants = [
            record_key(&p, ResultKind::Xi),
            record_key(&DriveParams { k: 0.2, ..p }, ResultKind::Tac),
            record_key(&DriveParams { lambda: 0.6, ..p }, ResultKind::Tac),
            record_key(&DriveParams { omega: 2.0, ..p }, ResultKind::Tac),
            record_key(&p.with_phi(0.1), ResultKind::Tac),
            record_key(&p.with_g(0.1), ResultKind::Tac),
        ];
        assert!(variants.iter().all(|v| *v != base));
    }
}
