//! Shared fixtures for unit tests: the millionaires pipeline from the
//! worked example.

use std::collections::BTreeMap;

use crate::labels::HostEnvironment;
use crate::lang::{parse_label, parse_stmts, Stmt};

pub(crate) fn mill_env() -> HostEnvironment {
    let mut hosts = BTreeMap::new();
    hosts.insert("alice".into(), parse_label("<A, A>").unwrap());
    hosts.insert("bob".into(), parse_label("<B, B>").unwrap());
    hosts.insert("mpc".into(), parse_label("<A & B, A & B>").unwrap());
    HostEnvironment::new(hosts).unwrap()
}

pub(crate) const MILL_CHOREO: &str = "let a @ alice = input @ alice;\n\
     move alice.a -> mpc.a2;\n\
     let b @ bob = input @ bob;\n\
     move bob.b -> mpc.b2;\n\
     let ea @ mpc = endorse(a2, <A, A>, <A, A & B>);\n\
     let eb @ mpc = endorse(b2, <B, B>, <B, A & B>);\n\
     let c @ mpc = lt(ea, eb);\n\
     let x @ mpc = declassify(c, <A & B, A & B>, <A | B, A & B>);\n\
     move mpc.x -> alice.x1;\n\
     move mpc.x -> bob.x2;\n\
     let o1 @ alice = output(x1) @ alice;\n\
     move alice.unit -> bob._;\n\
     let o2 @ bob = output(x2) @ bob;\n";

pub(crate) const MILL_SOURCE: &str = "let a @ alice = input @ alice;\n\
     let b @ bob = input @ bob;\n\
     let ea @ star = endorse(a, <A, A>, <A, A & B>);\n\
     let eb @ star = endorse(b, <B, B>, <B, A & B>);\n\
     let c @ star = lt(ea, eb);\n\
     let x @ star = declassify(c, <A & B, A & B>, <A | B, A & B>);\n\
     let o1 @ alice = output(x) @ alice;\n\
     let o2 @ bob = output(x) @ bob;\n";

pub(crate) fn mill_choreo() -> Stmt {
    parse_stmts(MILL_CHOREO).unwrap()
}

pub(crate) fn mill_source() -> Stmt {
    parse_stmts(MILL_SOURCE).unwrap()
}
