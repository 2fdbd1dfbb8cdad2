//! Security principals, labels, attacks, and host authority.
//!
//! Principals are negation-free boolean formulas over a finite set of atomic
//! principal names, ordered by `acts_for` (logical implication). Labels pair a
//! confidentiality principal with an integrity principal. An attack picks the
//! sets of atoms the adversary can read (public) and influence (untrusted),
//! which induces truth assignments classifying every principal and label.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

/// Maximum number of distinct atomic principals in one universe.
///
/// Small enough that exhaustive truth-table oracles stay cheap.
pub const MAX_ATOMS: usize = 16;

/// A clause of a principal formula: a conjunction of atom names.
pub type Clause = BTreeSet<String>;

/// A principal in the free bounded distributive lattice over atomic
/// principals, kept in canonical irredundant disjunctive normal form.
///
/// `acts_for` coincides with logical implication, so the strongest principal
/// (acts-for everything) is the empty disjunction and the weakest is the
/// empty conjunction:
///
/// * `Principal::strongest()` — no clauses.
/// * `Principal::weakest()` — a single empty clause.
///
/// The clause set is an antichain: no clause is a superset of another.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Principal {
    clauses: BTreeSet<Clause>,
}

impl Principal {
    /// The top of the authority order; acts-for every principal.
    pub fn strongest() -> Self {
        Principal {
            clauses: BTreeSet::new(),
        }
    }

    /// The bottom of the authority order; every principal acts-for it.
    pub fn weakest() -> Self {
        let mut clauses = BTreeSet::new();
        clauses.insert(Clause::new());
        Principal { clauses }
    }

    /// A single atomic principal.
    pub fn atom(name: impl Into<String>) -> Self {
        let mut clause = Clause::new();
        clause.insert(name.into());
        let mut clauses = BTreeSet::new();
        clauses.insert(clause);
        Principal { clauses }
    }

    /// Builds a principal from raw DNF clauses, canonicalizing to an
    /// irredundant antichain.
    pub fn from_clauses(clauses: impl IntoIterator<Item = Clause>) -> Self {
        let mut antichain: Vec<Clause> = Vec::new();
        for clause in clauses {
            if antichain.iter().any(|kept| kept.is_subset(&clause)) {
                continue;
            }
            antichain.retain(|kept| !clause.is_subset(kept));
            antichain.push(clause);
        }
        Principal {
            clauses: antichain.into_iter().collect(),
        }
    }

    pub fn is_strongest(&self) -> bool {
        self.clauses.is_empty()
    }

    pub fn is_weakest(&self) -> bool {
        self.clauses.len() == 1 && self.clauses.iter().next().unwrap().is_empty()
    }

    pub fn clauses(&self) -> impl Iterator<Item = &Clause> {
        self.clauses.iter()
    }

    /// Conjunction: strengthens authority (`p ∧ q ⪰ p`).
    pub fn and(&self, other: &Principal) -> Principal {
        let mut product = Vec::new();
        for a in &self.clauses {
            for b in &other.clauses {
                product.push(a.union(b).cloned().collect());
            }
        }
        Principal::from_clauses(product)
    }

    /// Disjunction: weakens authority (`p ⪰ p ∨ q`).
    pub fn or(&self, other: &Principal) -> Principal {
        Principal::from_clauses(self.clauses.iter().chain(other.clauses.iter()).cloned())
    }

    /// The acts-for order: `p ⪰ q` iff `p` logically implies `q`.
    ///
    /// On canonical forms this is clause containment: every clause of `p`
    /// must contain some clause of `q`.
    pub fn acts_for(&self, other: &Principal) -> bool {
        self.clauses
            .iter()
            .all(|p| other.clauses.iter().any(|q| q.is_subset(p)))
    }

    /// Evaluates the formula under a truth assignment given by the set of
    /// true atoms.
    pub fn eval(&self, true_atoms: &BTreeSet<String>) -> bool {
        self.clauses
            .iter()
            .any(|clause| clause.iter().all(|atom| true_atoms.contains(atom)))
    }

    /// All atom names mentioned by the formula.
    pub fn atoms(&self) -> BTreeSet<String> {
        self.clauses.iter().flatten().cloned().collect()
    }
}

impl fmt::Display for Principal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_strongest() {
            return write!(f, "top");
        }
        if self.is_weakest() {
            return write!(f, "bot");
        }
        let needs_parens = self.clauses.len() > 1;
        for (i, clause) in self.clauses.iter().enumerate() {
            if i > 0 {
                write!(f, " | ")?;
            }
            if clause.len() > 1 && needs_parens {
                write!(f, "(")?;
            }
            for (j, atom) in clause.iter().enumerate() {
                if j > 0 {
                    write!(f, " & ")?;
                }
                write!(f, "{atom}")?;
            }
            if clause.len() > 1 && needs_parens {
                write!(f, ")")?;
            }
        }
        Ok(())
    }
}

impl fmt::Debug for Principal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// An information-flow label: a confidentiality/integrity pair of principals.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Label {
    pub conf: Principal,
    pub integ: Principal,
}

impl Label {
    pub fn new(conf: Principal, integ: Principal) -> Self {
        Label { conf, integ }
    }

    /// `⟨p, p⟩` for a single principal.
    pub fn uniform(p: Principal) -> Self {
        Label {
            conf: p.clone(),
            integ: p,
        }
    }

    /// The least restrictive label `⟨⊥, ⊤⟩` ("public trusted").
    pub fn bottom() -> Self {
        Label {
            conf: Principal::weakest(),
            integ: Principal::strongest(),
        }
    }

    /// The most restrictive label `⟨⊤, ⊥⟩` ("secret untrusted").
    pub fn top() -> Self {
        Label {
            conf: Principal::strongest(),
            integ: Principal::weakest(),
        }
    }

    /// Confidentiality projection: weakens integrity to the weakest principal.
    pub fn conf_projection(&self) -> Label {
        Label {
            conf: self.conf.clone(),
            integ: Principal::weakest(),
        }
    }

    /// Integrity projection: weakens confidentiality to the weakest principal.
    pub fn integ_projection(&self) -> Label {
        Label {
            conf: Principal::weakest(),
            integ: self.integ.clone(),
        }
    }

    /// Secure-information-flow order:
    /// `⟨c1,i1⟩ ⊑ ⟨c2,i2⟩` iff `c2 ⪰ c1` and `i1 ⪰ i2`.
    pub fn flows_to(&self, other: &Label) -> bool {
        other.conf.acts_for(&self.conf) && self.integ.acts_for(&other.integ)
    }

    /// Least upper bound of the flow order: `⟨c1 ∧ c2, i1 ∨ i2⟩`.
    pub fn join(&self, other: &Label) -> Label {
        Label {
            conf: self.conf.and(&other.conf),
            integ: self.integ.or(&other.integ),
        }
    }

    /// Greatest lower bound of the flow order: `⟨c1 ∨ c2, i1 ∧ i2⟩`.
    pub fn meet(&self, other: &Label) -> Label {
        Label {
            conf: self.conf.or(&other.conf),
            integ: self.integ.and(&other.integ),
        }
    }

    /// Pointwise disjunction on both components.
    pub fn or_pointwise(&self, other: &Label) -> Label {
        Label {
            conf: self.conf.or(&other.conf),
            integ: self.integ.or(&other.integ),
        }
    }

    /// Pointwise conjunction on both components.
    pub fn and_pointwise(&self, other: &Label) -> Label {
        Label {
            conf: self.conf.and(&other.conf),
            integ: self.integ.and(&other.integ),
        }
    }

    /// Pointwise acts-for on both components.
    pub fn acts_for(&self, other: &Label) -> bool {
        self.conf.acts_for(&other.conf) && self.integ.acts_for(&other.integ)
    }

    /// A label is uncompromised when it is at least as trusted as it is
    /// secret: `i ⪰ c`.
    pub fn uncompromised(&self) -> bool {
        self.integ.acts_for(&self.conf)
    }

    pub fn atoms(&self) -> BTreeSet<String> {
        let mut atoms = self.conf.atoms();
        atoms.extend(self.integ.atoms());
        atoms
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<{}, {}>", self.conf, self.integ)
    }
}

impl fmt::Debug for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

#[derive(Debug, thiserror::Error)]
pub enum LabelError {
    #[error("invalid attack: untrusted atom `{0}` is not public")]
    UntrustedNotPublic(String),
    #[error("host `{0}` has a compromised label (integrity does not act for confidentiality)")]
    CompromisedHost(String),
    #[error("unknown host `{0}`")]
    UnknownHost(String),
    #[error("atom universe has {0} atoms; at most {max} supported", max = MAX_ATOMS)]
    TooManyAtoms(usize),
}

/// An adversary's static corruption power: the atoms it can read and the
/// atoms it can influence. Valid attacks have `untrusted ⊆ public`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Attack {
    public_atoms: BTreeSet<String>,
    untrusted_atoms: BTreeSet<String>,
}

impl Attack {
    pub fn new(
        public_atoms: BTreeSet<String>,
        untrusted_atoms: BTreeSet<String>,
    ) -> Result<Self, LabelError> {
        for atom in &untrusted_atoms {
            if !public_atoms.contains(atom) {
                return Err(LabelError::UntrustedNotPublic(atom.clone()));
            }
        }
        Ok(Attack {
            public_atoms,
            untrusted_atoms,
        })
    }

    /// The empty attack: nothing public, nothing untrusted.
    pub fn empty() -> Self {
        Attack {
            public_atoms: BTreeSet::new(),
            untrusted_atoms: BTreeSet::new(),
        }
    }

    pub fn public_atoms(&self) -> &BTreeSet<String> {
        &self.public_atoms
    }

    pub fn untrusted_atoms(&self) -> &BTreeSet<String> {
        &self.untrusted_atoms
    }

    /// A principal is public when it evaluates true under the assignment
    /// mapping the public atoms to true.
    pub fn principal_public(&self, p: &Principal) -> bool {
        p.eval(&self.public_atoms)
    }

    /// A principal is untrusted when it evaluates true under the assignment
    /// mapping the untrusted atoms to true.
    pub fn principal_untrusted(&self, p: &Principal) -> bool {
        p.eval(&self.untrusted_atoms)
    }

    pub fn is_public(&self, l: &Label) -> bool {
        self.principal_public(&l.conf)
    }

    pub fn is_secret(&self, l: &Label) -> bool {
        !self.is_public(l)
    }

    pub fn is_untrusted(&self, l: &Label) -> bool {
        self.principal_untrusted(&l.integ)
    }

    pub fn is_trusted(&self, l: &Label) -> bool {
        !self.is_untrusted(l)
    }

    /// Enumerates every valid attack over the given atoms.
    pub fn enumerate_valid(atoms: &BTreeSet<String>) -> Vec<Attack> {
        let atoms: Vec<&String> = atoms.iter().collect();
        let n = atoms.len();
        assert!(n <= MAX_ATOMS, "atom universe too large to enumerate");
        let mut attacks = Vec::new();
        for pub_bits in 0u32..(1 << n) {
            // untrusted must be a subset of public
            let mut sub = pub_bits;
            loop {
                let public: BTreeSet<String> = (0..n)
                    .filter(|i| pub_bits & (1 << i) != 0)
                    .map(|i| atoms[i].clone())
                    .collect();
                let untrusted: BTreeSet<String> = (0..n)
                    .filter(|i| sub & (1 << i) != 0)
                    .map(|i| atoms[i].clone())
                    .collect();
                attacks.push(Attack::new(public, untrusted).expect("subset is valid"));
                if sub == 0 {
                    break;
                }
                sub = (sub - 1) & pub_bits;
            }
        }
        attacks.sort_by(|a, b| {
            (a.public_atoms.clone(), a.untrusted_atoms.clone())
                .cmp(&(b.public_atoms.clone(), b.untrusted_atoms.clone()))
        });
        attacks.dedup();
        attacks
    }
}

/// How an attack classifies a host.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum HostClass {
    /// Secret and trusted: follows the protocol, data hidden from the adversary.
    Honest,
    /// Public and trusted: follows the protocol but leaks everything.
    SemiHonest,
    /// Public and untrusted: fully controlled by the adversary.
    Malicious,
}

impl HostClass {
    pub fn is_malicious(self) -> bool {
        matches!(self, HostClass::Malicious)
    }

    pub fn is_dishonest(self) -> bool {
        !matches!(self, HostClass::Honest)
    }
}

pub fn classify_label(l: &Label, attack: &Attack) -> HostClass {
    if attack.is_secret(l) {
        HostClass::Honest
    } else if attack.is_trusted(l) {
        HostClass::SemiHonest
    } else {
        HostClass::Malicious
    }
}

/// The host-to-authority-label map, with the fixed labels of the adversary,
/// environment, and ideal-host endpoints.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HostEnvironment {
    hosts: BTreeMap<String, Label>,
}

impl HostEnvironment {
    /// Builds a host environment, checking every label is uncompromised and
    /// the atom universe is small enough for exhaustive oracles.
    pub fn new(hosts: BTreeMap<String, Label>) -> Result<Self, LabelError> {
        let mut atoms = BTreeSet::new();
        for (name, label) in &hosts {
            if !label.uncompromised() {
                return Err(LabelError::CompromisedHost(name.clone()));
            }
            atoms.extend(label.atoms());
        }
        if atoms.len() > MAX_ATOMS {
            return Err(LabelError::TooManyAtoms(atoms.len()));
        }
        Ok(HostEnvironment { hosts })
    }

    pub fn hosts(&self) -> impl Iterator<Item = (&String, &Label)> {
        self.hosts.iter()
    }

    pub fn host_names(&self) -> impl Iterator<Item = &String> {
        self.hosts.keys()
    }

    pub fn contains(&self, host: &str) -> bool {
        self.hosts.contains_key(host)
    }

    pub fn host_label(&self, host: &str) -> Result<&Label, LabelError> {
        self.hosts
            .get(host)
            .ok_or_else(|| LabelError::UnknownHost(host.to_string()))
    }

    /// All atoms mentioned by any host label.
    pub fn atoms(&self) -> BTreeSet<String> {
        self.hosts.values().flat_map(|l| l.atoms()).collect()
    }

    /// The fixed label of the adversary endpoint: `⟨⊥, ⊤⟩`, so channels to
    /// the adversary are public and inherit the other endpoint's integrity.
    pub fn adversary_label() -> Label {
        Label::bottom()
    }

    /// The fixed label of the environment endpoint: `⟨⊤, ⊤⟩`, so channels to
    /// the environment keep the other endpoint's label.
    pub fn environment_label() -> Label {
        Label::uniform(Principal::strongest())
    }

    /// The label of the fully trusted ideal host.
    pub fn ideal_label() -> Label {
        Label::uniform(Principal::strongest())
    }

    pub fn classify(&self, host: &str, attack: &Attack) -> Result<HostClass, LabelError> {
        Ok(classify_label(self.host_label(host)?, attack))
    }

    pub fn malicious_hosts(&self, attack: &Attack) -> BTreeSet<String> {
        self.hosts
            .iter()
            .filter(|(_, l)| classify_label(l, attack).is_malicious())
            .map(|(name, _)| name.clone())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(text: &str) -> Principal {
        crate::lang::parse_principal(text).unwrap()
    }

    fn lbl(text: &str) -> Label {
        crate::lang::parse_label(text).unwrap()
    }

    fn atoms(names: &[&str]) -> BTreeSet<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    /// Brute-force oracle: `a` acts for `b` iff `a` implies `b` under every
    /// truth assignment to the atom universe.
    fn oracle_acts_for(a: &Principal, b: &Principal, universe: &BTreeSet<String>) -> bool {
        let universe: Vec<&String> = universe.iter().collect();
        let n = universe.len();
        for bits in 0u32..(1 << n) {
            let assignment: BTreeSet<String> = (0..n)
                .filter(|i| bits & (1 << i) != 0)
                .map(|i| universe[i].clone())
                .collect();
            if a.eval(&assignment) && !b.eval(&assignment) {
                return false;
            }
        }
        true
    }

    #[test]
    fn acts_for_matches_implication_oracle() {
        let universe = atoms(&["A", "B"]);
        assert!(p("A & B").acts_for(&p("A")));
        assert!(p("A").acts_for(&p("bot")));
        assert!(p("top").acts_for(&p("A & B")));
        // frozen from the truth-table oracle over all 2^2 assignments
        assert!(!p("A | B").acts_for(&p("A & B")));
        assert!(oracle_acts_for(&p("A & B"), &p("A"), &universe));
        assert!(!oracle_acts_for(&p("A | B"), &p("A & B"), &universe));
    }

    #[test]
    fn canonical_forms_are_irredundant_antichains() {
        let q = p("A | A & B");
        assert_eq!(q, p("A"));
        for c1 in q.clauses() {
            for c2 in q.clauses() {
                assert!(c1 == c2 || (!c1.is_subset(c2) && !c2.is_subset(c1)));
            }
        }
    }

    #[test]
    fn bottom_is_identity_of_and_and_absorbs_or() {
        let a = p("A");
        assert_eq!(Principal::weakest().and(&a), a);
        assert_eq!(Principal::weakest().or(&a), Principal::weakest());
        assert_eq!(Principal::strongest().and(&a), Principal::strongest());
        assert_eq!(Principal::strongest().or(&a), a);
    }

    #[test]
    fn flows_to_examples() {
        // public-trusted is least restrictive
        for l in ["<A, A>", "<A & B, bot>", "<top, top>", "<bot, top>"] {
            assert!(Label::bottom().flows_to(&lbl(l)), "{l}");
        }
        assert!(lbl("<A, A>").flows_to(&lbl("<A & B, A>")));
        assert!(!lbl("<A & B, bot>").flows_to(&lbl("<A, bot>")));
    }

    #[test]
    fn join_meet_examples() {
        let a = lbl("<A, A>");
        let b = lbl("<B, B>");
        assert_eq!(a.join(&b), lbl("<A & B, A | B>"));
        assert_eq!(a.meet(&b), lbl("<A | B, A & B>"));
        assert_eq!(a.join(&Label::bottom()), a);
        assert_eq!(a.meet(&Label::top()), a);
    }

    #[test]
    fn attack_predicates_evaluate_assignments() {
        let attack = Attack::new(atoms(&["A"]), atoms(&["A"])).unwrap();
        assert!(attack.principal_public(&p("A")));
        assert!(!attack.principal_public(&p("A & B")));
        assert!(attack.principal_public(&p("A | B")));

        let collusion = Attack::new(atoms(&["A", "B"]), BTreeSet::new()).unwrap();
        assert!(collusion.is_public(&lbl("<A & B, A & B>")));
        assert!(collusion.is_trusted(&lbl("<A & B, A & B>")));
    }

    #[test]
    fn weakest_public_strongest_secret_under_every_valid_attack() {
        for attack in Attack::enumerate_valid(&atoms(&["A", "B"])) {
            assert!(attack.principal_public(&Principal::weakest()));
            assert!(!attack.principal_public(&Principal::strongest()));
            assert!(attack.principal_untrusted(&Principal::weakest()));
            assert!(!attack.principal_untrusted(&Principal::strongest()));
        }
    }

    #[test]
    fn invalid_attack_rejected() {
        assert!(Attack::new(atoms(&["A"]), atoms(&["B"])).is_err());
    }

    #[test]
    fn uncompromised_examples() {
        assert!(lbl("<A, A>").uncompromised());
        assert!(lbl("<A, A & B>").uncompromised());
        assert!(!lbl("<A & B, A>").uncompromised());
    }

    #[test]
    fn classification_examples() {
        let alice = lbl("<A, A>");
        let mpc = lbl("<A & B, A & B>");
        let attack = Attack::new(atoms(&["A"]), atoms(&["A"])).unwrap();
        assert_eq!(classify_label(&alice, &attack), HostClass::Malicious);
        assert_eq!(classify_label(&mpc, &attack), HostClass::Honest);
        let empty = Attack::empty();
        for l in [&alice, &mpc] {
            assert_eq!(classify_label(l, &empty), HostClass::Honest);
        }
    }

    #[test]
    fn uncompromised_labels_never_secret_and_untrusted() {
        // theorem after the uncompromised-label definition, checked
        // exhaustively over 2 atoms
        let universe = atoms(&["A", "B"]);
        let principals = enumerate_principals(&universe);
        for attack in Attack::enumerate_valid(&universe) {
            for c in &principals {
                for i in &principals {
                    let l = Label::new(c.clone(), i.clone());
                    if l.uncompromised() {
                        assert!(!(attack.is_secret(&l) && attack.is_untrusted(&l)), "{l}");
                    }
                }
            }
        }
    }

    #[test]
    fn public_set_is_a_prime_filter() {
        // closed under conjunction, downward closed under acts-for,
        // and prime for disjunction
        let universe = atoms(&["A", "B", "C"]);
        let principals = enumerate_principals(&universe);
        let attack = Attack::new(atoms(&["A", "C"]), atoms(&["C"])).unwrap();
        for a in &principals {
            for b in &principals {
                let pa = attack.principal_public(a);
                let pb = attack.principal_public(b);
                assert_eq!(attack.principal_public(&a.and(b)), pa && pb);
                assert_eq!(attack.principal_public(&a.or(b)), pa || pb);
                if pa && a.acts_for(b) {
                    assert!(attack.principal_public(b));
                }
            }
        }
    }

    #[test]
    fn channel_labels() {
        let mut hosts = BTreeMap::new();
        hosts.insert("alice".to_string(), lbl("<A, A>"));
        let env = HostEnvironment::new(hosts).unwrap();
        let alice = env.host_label("alice").unwrap().clone();
        // label(env, ch) = label(ch)
        assert_eq!(
            HostEnvironment::environment_label().or_pointwise(&alice),
            alice
        );
        // communication with the adversary is public
        assert_eq!(
            HostEnvironment::adversary_label().or_pointwise(&alice),
            alice.integ_projection()
        );
        // idempotence
        assert_eq!(alice.or_pointwise(&alice), alice);
    }

    #[test]
    fn compromised_host_rejected() {
        let mut hosts = BTreeMap::new();
        hosts.insert("weird".to_string(), lbl("<A & B, A>"));
        assert!(HostEnvironment::new(hosts).is_err());
    }

    /// Enumerates every canonical principal over the atom universe
    /// (antichains of clauses); exponential, for tests only.
    pub(crate) fn enumerate_principals(universe: &BTreeSet<String>) -> Vec<Principal> {
        let universe: Vec<&String> = universe.iter().collect();
        let n = universe.len();
        let clause_count = 1usize << n;
        let mut out = Vec::new();
        // each subset of the clause space, canonicalized, then deduplicated
        let mut seen = BTreeSet::new();
        for bits in 0u64..(1 << clause_count) {
            let clauses: Vec<Clause> = (0..clause_count)
                .filter(|c| bits & (1 << c) != 0)
                .map(|c| {
                    (0..n)
                        .filter(|i| c & (1 << i) != 0)
                        .map(|i| universe[i].clone())
                        .collect()
                })
                .collect();
            let p = Principal::from_clauses(clauses);
            if seen.insert(p.clone()) {
                out.push(p);
            }
        }
        out
    }

    #[test]
    fn lattice_laws_exhaustive_two_atoms() {
        let universe = atoms(&["A", "B"]);
        let principals = enumerate_principals(&universe);
        assert_eq!(principals.len(), 6); // free bounded distributive lattice on 2 generators
        for a in &principals {
            assert!(a.acts_for(a));
            for b in &principals {
                // and = least upper bound in the acts-for order
                let ab = a.and(b);
                assert!(ab.acts_for(a) && ab.acts_for(b));
                // or = greatest lower bound
                let o = a.or(b);
                assert!(a.acts_for(&o) && b.acts_for(&o));
                for c in &principals {
                    if c.acts_for(a) && c.acts_for(b) {
                        assert!(c.acts_for(&ab));
                    }
                    if a.acts_for(c) && b.acts_for(c) {
                        assert!(o.acts_for(c));
                    }
                }
                // antisymmetry
                if a.acts_for(b) && b.acts_for(a) {
                    assert_eq!(a, b);
                }
            }
        }
    }
}
