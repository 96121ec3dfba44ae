//! Built-in network layouts and sequence sets.
//!
//! Eight anchors on a 40 m square (corners and edge midpoints), numbered
//! counter-clockwise from the lower-left corner:
//!
//! ```text
//!   7 (-20, 20)   6 (0, 20)   5 (20, 20)
//!   8 (-20,  0)               4 (20,  0)
//!   1 (-20,-20)   2 (0,-20)   3 (20,-20)
//! ```
//!
//! The receiver sits at `(5, 5)`. In the auxiliary-node layout node 1 is
//! replaced by an auxiliary transmitter at `(-10, 10)`.

use alloc::{vec, vec::Vec};

use crate::error::Result;
use crate::model::{Network, Sequence, Technique, Theta, SPEED_OF_LIGHT};
use crate::sim::QStyle;

pub const ANCHORS: [[f64; 2]; 8] = [
    [-20.0, -20.0],
    [0.0, -20.0],
    [20.0, -20.0],
    [20.0, 0.0],
    [20.0, 20.0],
    [0.0, 20.0],
    [-20.0, 20.0],
    [-20.0, 0.0],
];

pub const RECEIVER: [f64; 2] = [5.0, 5.0];
pub const AUX_NODE: [f64; 2] = [-10.0, 10.0];

/// Network, ground truth and sequence set for one experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub network: Network,
    pub theta_star: Theta,
    pub sequences: Vec<Sequence>,
    pub q_style: QStyle,
}

impl Scenario {
    pub fn technique(&self) -> Technique {
        self.sequences[0].technique()
    }
}

fn sequences(technique: Technique, lists: &[&[usize]]) -> Result<Vec<Sequence>> {
    lists.iter().map(|l| Sequence::new(technique, l.to_vec())).collect()
}

/// Receiver self-localization against the eight anchors.
pub fn self_localization(technique: Technique) -> Result<Scenario> {
    let network = Network::new(2, 0, &ANCHORS, SPEED_OF_LIGHT, 0.0)?;
    let (lists, q_style): (&[&[usize]], QStyle) = match technique {
        Technique::Toa => (&[&[6, 5, 7, 8], &[4, 3, 2, 1]], QStyle::Identity),
        Technique::Tdoa => (&[&[6, 5, 7, 8], &[4, 3, 2, 1]], QStyle::AdjacentThird),
        Technique::Tdst => {
            (&[&[6, 4, 5, 3], &[3, 6, 4, 5], &[5, 3, 6, 4], &[4, 5, 3, 6]], QStyle::AdjacentThird)
        }
    };
    Ok(Scenario {
        network,
        theta_star: Theta::new(2, RECEIVER.to_vec())?,
        sequences: sequences(technique, lists)?,
        q_style,
    })
}

/// TDST with node 1 an auxiliary transmitter at an unknown position.
pub fn auxiliary_tdst() -> Result<Scenario> {
    let network = Network::new(2, 1, &ANCHORS[1..], SPEED_OF_LIGHT, 0.0)?;
    let lists: &[&[usize]] = &[
        &[2, 3, 4, 5, 6, 7, 8, 2, 3, 4, 5, 6, 7, 8],
        &[2, 1, 3, 1, 4, 1, 5, 1, 6, 1, 7, 1, 8, 1],
    ];
    Ok(Scenario {
        network,
        theta_star: Theta::new(2, vec![RECEIVER[0], RECEIVER[1], AUX_NODE[0], AUX_NODE[1]])?,
        sequences: sequences(Technique::Tdst, lists)?,
        q_style: QStyle::AdjacentThird,
    })
}
