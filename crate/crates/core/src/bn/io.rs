//! Versioned JSON document for networks.

use serde::{Deserialize, Serialize};

use super::network::{Cpd, Network, Variable};
use super::BnError;

pub const NETWORK_FORMAT: &str = "dca-network";
pub const NETWORK_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
struct NetworkDocument {
    format: String,
    version: u32,
    name: String,
    variables: Vec<Variable>,
    cpds: Vec<Cpd>,
}

pub fn serialize_network(net: &Network) -> String {
    let doc = NetworkDocument {
        format: NETWORK_FORMAT.to_string(),
        version: NETWORK_FORMAT_VERSION,
        name: net.name.clone(),
        variables: net.variables.clone(),
        cpds: net.cpds.clone(),
    };
    serde_json::to_string_pretty(&doc).expect("network serialization cannot fail")
}

/// Parses a network document. Structural validity is not checked here.
pub fn parse_network(text: &str) -> Result<Network, BnError> {
    let doc: NetworkDocument =
        serde_json::from_str(text).map_err(|e| BnError::Parse(e.to_string()))?;
    if doc.format != NETWORK_FORMAT {
        return Err(BnError::Parse(format!(
            "expected format {NETWORK_FORMAT}, found {}",
            doc.format
        )));
    }
    if doc.version != NETWORK_FORMAT_VERSION {
        return Err(BnError::UnsupportedVersion(doc.version));
    }
    Ok(Network::new(doc.name, doc.variables, doc.cpds))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bn::{Cpt, NoisyOrCpd};

    #[test]
    fn round_trip_with_both_cpd_kinds() {
        let net = Network::new(
            "mixed",
            vec![
                Variable::binary("A", "a"),
                Variable::binary("B", "b"),
                Variable::binary("Y", "y"),
            ],
            vec![
                Cpt::prior("A", vec![0.123456789012345, 0.876543210987655]).into(),
                Cpt::prior("B", vec![0.5, 0.5]).into(),
                NoisyOrCpd::new("Y", &["A", "B"], vec![0.8, 0.6], 0.05).into(),
            ],
        );
        let text = serialize_network(&net);
        assert!(text.contains("\"kind\": \"noisy_or\""));
        assert_eq!(parse_network(&text).unwrap(), net);
    }

    #[test]
    fn rejects_unknown_version() {
        let text = r#"{"format":"dca-network","version":9,"name":"x","variables":[],"cpds":[]}"#;
        assert!(matches!(
            parse_network(text),
            Err(BnError::UnsupportedVersion(9))
        ));
    }
}
