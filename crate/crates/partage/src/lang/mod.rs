//! Unified AST, parser, and printer for source programs, choreographies,
//! hybrid distributed programs, and asynchronous run-time terms.

pub mod ast;
pub mod parse;
pub mod print;

pub use ast::{alpha_eq, tier_of, Atom, Endpoint, Expr, Loc, OpKind, Stmt, Tier, Value};
pub use parse::{
    alpha_rename, check_kind, parse_label, parse_principal, parse_program, parse_stmts, Kind,
    ParseError,
};
pub use print::{pretty, pretty_program};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::labels::Principal;

    fn mill_choreography() -> &'static str {
        "kind = choreography\n\
         let a @ alice = input @ alice;\n\
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
         let o2 @ bob = output(x2) @ bob;\n"
    }

    #[test]
    fn millionaires_choreography_parses() {
        let (kind, s) = parse_program(mill_choreography()).unwrap();
        assert_eq!(kind, Kind::Choreography);
        assert_eq!(s.size(), 14); // 13 statements + terminating skip
        assert!(s.free_vars().is_empty());
        assert_eq!(tier_of(&s), Tier::Choreography);
    }

    #[test]
    fn empty_file_is_skip() {
        let (_, s) = parse_program("kind = source\n").unwrap();
        assert_eq!(s, Stmt::Skip);
    }

    #[test]
    fn move_rejected_in_source_kind() {
        let err = parse_program("kind = source\nmove alice.x -> bob.x;\n").unwrap_err();
        assert!(err.to_string().contains("source"), "{err}");
    }

    #[test]
    fn case_rejected_in_choreography_kind() {
        let text = "kind = choreography\ncase alice -> bob { true => { } }\n";
        assert!(parse_program(text).is_err());
    }

    #[test]
    fn star_rejected_outside_source() {
        let text = "kind = choreography\nlet x @ star = 5;\n";
        assert!(parse_program(text).is_err());
    }

    #[test]
    fn millionaires_round_trips() {
        let (kind, s) = parse_program(mill_choreography()).unwrap();
        let printed = pretty_program(kind, &s);
        let (kind2, s2) = parse_program(&printed).unwrap();
        assert_eq!(kind, kind2);
        assert_eq!(s, s2);
    }

    #[test]
    fn shadowed_binders_get_fresh_names() {
        let s = parse_stmts(
            "let x @ star = 1;\n\
             let x @ star = add(x, 1);\n\
             let y @ star = add(x, 1);\n",
        )
        .unwrap();
        // second binder renamed; inner uses follow the closest binder
        let printed = pretty(&s);
        assert!(printed.contains("let x_1 @ star = add(x, 1);"), "{printed}");
        assert!(printed.contains("let y @ star = add(x_1, 1);"), "{printed}");
    }

    #[test]
    fn alpha_eq_ignores_binder_names() {
        let a = parse_stmts("let x @ star = 1;\nlet y @ star = add(x, 2);\n").unwrap();
        let b = parse_stmts("let u @ star = 1;\nlet v @ star = add(u, 2);\n").unwrap();
        let c = parse_stmts("let u @ star = 1;\nlet v @ star = add(v, 2);\n").unwrap();
        assert!(alpha_eq(&a, &b));
        assert!(!alpha_eq(&a, &c));
    }

    #[test]
    fn frame_hosts_follow_the_hosts_table() {
        let s = parse_stmts("let a @ alice = input @ alice;\n").unwrap();
        assert_eq!(
            s.frame_hosts().unwrap(),
            [Endpoint::host("alice")].into_iter().collect()
        );
        let m = parse_stmts("move alice.unit -> bob.x;\n").unwrap();
        assert_eq!(
            m.frame_hosts().unwrap(),
            [Endpoint::host("alice"), Endpoint::host("bob")]
                .into_iter()
                .collect()
        );
        assert_eq!(Stmt::Skip.frame_hosts(), None);
    }

    #[test]
    fn free_vars_of_closed_programs_are_empty() {
        let (_, s) = parse_program(mill_choreography()).unwrap();
        assert!(s.free_vars().is_empty());
        assert!(Stmt::Skip.free_vars().is_empty());
        let open = parse_stmts("let y @ star = add(x, 1);\n").unwrap();
        assert_eq!(open.free_vars(), ["x".to_string()].into());
    }

    #[test]
    fn principal_parsing_is_canonical() {
        let p = parse_principal("A & B | A").unwrap();
        assert_eq!(p, Principal::atom("A")); // absorption
        let q = parse_principal("(A | B) & C").unwrap();
        let r = parse_principal("A & C | B & C").unwrap();
        assert_eq!(q, r); // distributivity
        assert_eq!(parse_principal("top").unwrap(), Principal::strongest());
        assert_eq!(parse_principal("bot").unwrap(), Principal::weakest());
    }

    #[test]
    fn reserved_names_rejected_as_hosts() {
        assert!(parse_stmts("let x @ env = 5;\n").is_err());
        assert!(parse_stmts("move adv.x -> bob.y;\n").is_err());
    }

    #[test]
    fn io_host_must_match_binding_host() {
        assert!(parse_stmts("let x @ alice = input @ bob;\n").is_err());
    }
}
