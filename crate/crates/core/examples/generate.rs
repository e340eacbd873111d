//! Samples a program from the bundled Python subset and prints it.
//!
//! `cargo run -p pdadecode --example generate -- [seed]`

use pdadecode::decode::{generate, render, DecodeConfig, Mode, Uniform};
use pdadecode::{compile, grammars, parse_grammar, recognize, Session};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seed = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(7);
    let pda = compile(&parse_grammar(grammars::MINI_PYTHON)?)?;

    let mut session = Session::new(&pda);
    let valid = session.valid_set()?;
    println!("# {} terminals can start a program", valid.len());

    let cfg = DecodeConfig { mode: Mode::Sample, seed, max_steps: 64, ..DecodeConfig::default() };
    let result = generate(&pda, &mut Uniform, &cfg)?;
    assert!(recognize(&pda, &result.tokens)?.is_accepted());
    print!("{}", render(&result.tokens)?);
    Ok(())
}
