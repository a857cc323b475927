//! Literal, string-level transcriptions of the answer and common ground
//! rules, kept independent of the crate's typed implementation so the two
//! can be compared exhaustively.

#![allow(dead_code, clippy::if_same_then_else)]

pub const QBELS: [&str; 3] = ["CT+", "PS", "CT-"];
pub const BELS: [&str; 4] = ["CT+", "PS", "CT-", "NB"];
pub const CGS: [&str; 4] = ["JA", "IN", "RT", "NA"];

pub fn resolve_1st_order_yn_answer(qbel: &str, sbel: &str) -> bool {
    if qbel == sbel {
        true
    } else {
        qbel == "PS" && sbel == "CT+"
    }
}

pub fn resolve_2nd_order_yn_answer(
    qbel: &str,
    sbel1: &str,
    sbel2: &str,
    cg1: &str,
    _cg2: &str,
) -> bool {
    if ["PS", "CT+"].contains(&qbel)
        && ["JA", "IN"].contains(&cg1)
        && ((qbel == sbel1) || ((qbel == "PS") && (sbel1 == "CT+")))
    {
        return true;
    } else if qbel == "CT-" && cg1 == "RT" && qbel == sbel2 {
        return true;
    }
    false
}

pub fn resolve_3rd_order_yn_answer(
    qbel: &str,
    sbel1: &str,
    _sbel2: &str,
    cg1: &str,
    _cg2: &str,
) -> bool {
    if ["PS", "CT+"].contains(&qbel)
        && ["JA", "IN"].contains(&cg1)
        && ((qbel == sbel1) || ((qbel == "PS") && (sbel1 == "CT+")))
    {
        return true;
    } else if qbel == "CT-" && ["RT", "NA"].contains(&cg1) && qbel == sbel1 {
        return true;
    }
    false
}

/// Common ground rules 1-5 applied top to bottom; the first match wins.
/// Returns the label, "JA|IN" for the underdetermined case, "NULL" for no
/// common ground and "NO_RULE" when nothing matches.
pub fn cg_from_beliefs(bel_a: &str, bel_b: &str) -> &'static str {
    if bel_a == "CT-" || bel_b == "CT-" {
        "RT"
    } else if bel_a == "CT+" && bel_b == "CT+" {
        "JA|IN"
    } else if bel_a == "PS" && bel_b == "CT+" {
        "JA|IN"
    } else if bel_a == "CT+" && bel_b == "PS" {
        "JA|IN"
    } else if bel_a == "NB" || bel_b == "NB" {
        "NULL"
    } else {
        "NO_RULE"
    }
}

/// Every `(qbel, sbel1, sbel2, cg1, cg2)` tuple: 3 x 4^4 = 768.
pub fn all_tuples() -> Vec<[&'static str; 5]> {
    let mut out = Vec::with_capacity(768);
    for q in QBELS {
        for s1 in BELS {
            for s2 in BELS {
                for c1 in CGS {
                    for c2 in CGS {
                        out.push([q, s1, s2, c1, c2]);
                    }
                }
            }
        }
    }
    out
}

pub fn transcribed(order: u8, t: [&str; 5]) -> bool {
    match order {
        1 => resolve_1st_order_yn_answer(t[0], t[1]),
        2 => resolve_2nd_order_yn_answer(t[0], t[1], t[2], t[3], t[4]),
        3 => resolve_3rd_order_yn_answer(t[0], t[1], t[2], t[3], t[4]),
        _ => unreachable!(),
    }
}
