//! Golden directive inputs, one group per grammar production.

/// (production, directive line that must parse)
pub const ACCEPT: &[(&str, &str)] = &[
    ("scope", "#pragma quantum scope"),
    ("scope with", "#pragma quantum scope with (my_int)"),
    ("scope with", "#pragma quantum scope with (a, b, c)"),
    ("move", "#pragma quantum move toDevice(qreg)"),
    ("move", "#pragma quantum move toHost(x, y)"),
    ("move", "#pragma quantum move toDevice(qreg) toHost(x,y)"),
    ("ctrl variable", "#pragma quantum ctrl (qb)"),
    ("ctrl condition", "#pragma quantum ctrl (qreg == 1 << idx)"),
    ("ctrl condition", "#pragma quantum ctrl (a && !b)"),
    ("routine", "#pragma quantum routine"),
    ("routine bound", "#pragma quantum routine (double angle)"),
    ("routine bound", "#pragma quantum routine (double angle, uint64 k)"),
    ("routine typed", "#pragma quantum routine typed"),
    ("routine typed", "#pragma quantum routine typed (int n)"),
    ("routine dynamic", "#pragma quantum routine dynamic"),
    ("routine dynamic", "#pragma quantum routine dynamic (double angle)"),
    ("compute", "#pragma quantum compute"),
];

/// (production, near-miss directive line that must be rejected)
pub const REJECT: &[(&str, &str)] = &[
    ("scope", "#pragma quantum scoped"),
    ("scope with", "#pragma quantum scope with"),
    ("scope with", "#pragma quantum scope with my_int"),
    ("scope with", "#pragma quantum scope with (a,)"),
    ("move", "#pragma quantum move (qreg)"),
    ("move", "#pragma quantum move"),
    ("move", "#pragma quantum move toDevice qreg"),
    ("move", "#pragma quantum move sideways(qreg)"),
    ("ctrl variable", "#pragma quantum ctrl"),
    ("ctrl variable", "#pragma quantum ctrl qb"),
    ("ctrl condition", "#pragma quantum ctrl (a ==)"),
    ("routine", "#pragma quantum routine flexible"),
    ("routine bound", "#pragma quantum routine (double)"),
    ("routine bound", "#pragma quantum routine (double angle"),
    ("routine typed", "#pragma quantum routine typed dynamic"),
    ("routine dynamic", "#pragma quantum routine dynamic angle"),
    ("compute", "#pragma quantum compute now"),
    ("compute", "#pragma quantum"),
];

pub fn parses(line: &str) -> bool {
    match qpragma::frontend::tokenize(line) {
        Ok(tokens) => qpragma::frontend::parse_pragma(&tokens).is_ok(),
        Err(_) => false,
    }
}
