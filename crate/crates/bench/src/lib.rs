//! Workloads shared by the benchmarks in `benches/`.

use respi_core::history::Trace;
use respi_core::parser::parse_program;
use respi_core::{enumerate_forward, Configuration, Engine};

/// `n` independent client/server pairs, each on its own shared channel,
/// exchanging `rounds` messages.
pub fn pairs(n: usize, rounds: usize) -> Configuration {
    let mut src = String::new();
    for i in 0..n {
        let mut client = format!("req a{i}(x).");
        let mut server = format!("acc a{i}(y).");
        for r in 0..rounds {
            client.push_str(&format!("x!<{r}>."));
            server.push_str(&format!("y?(v{r})."));
        }
        client.push('0');
        server.push('0');
        if i > 0 {
            src.push_str(" | ");
        }
        src.push_str(&format!("t{} : {client} | t{} : {server}", 2 * i + 1, 2 * i + 2));
    }
    parse_program(&src, None).expect("generated source parses").config
}

/// Applies the first enabled forward redex until none is left.
pub fn run_to_end(engine: &mut Engine, m: &Configuration) -> Trace {
    let mut trace = Trace::new(m.clone());
    let mut cur = m.clone();
    while let Some(r) = enumerate_forward(&cur).into_iter().next() {
        let (next, step) = engine.apply(&cur, &r).expect("enumerated redexes apply");
        trace.push(step);
        cur = next;
    }
    trace
}
