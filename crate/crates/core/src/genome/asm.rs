//! Genome assembler and read-trace disassembler.
//!
//! Source files are line oriented; `#` starts a comment.
//!
//! ```text
//! net reader                 # weight block; unspecified weights use `default`
//!   default -0.0159
//!   h0 red 1                 # hidden h0 <- input red
//!   h0 bias -0.5
//!   read h0 1                # output read <- hidden h0
//!   h* s* 1                  # `*` expands over slot indices 0..N
//! end
//!
//! cell founder               # phenotype used by `seed` and `expand`
//!   absorb 1 1 1
//!   luminosity 0
//!   mass 0.3
//!   radius 0.12
//!   net reader
//! end
//!
//! seed founder               # phenotype of the initial cell
//! start bud                  # label of the initial read position
//!
//! split: disconnect next=bud
//! bud:   expand founder child=split copy=all next=sever
//! sever: disconnect
//! halt:  transition next=halt
//! ```
//!
//! Hidden targets are `h<j>`; their sources are `s<k>`, `l<k>`, `e<k>`, `red`,
//! `green`, `blue`, `touch` or `bias`. Output targets are `s<k>`, `l<k>`,
//! `e<k>`, `read`, `eat`, `fusion`, `light`; their sources are `h<j>` or `bias`.
//!
//! Every instruction gets a unique three-symbol marker. The Book starts with
//! the seed phenotype payload, followed by one record per instruction:
//! `marker, action symbol, [payload], next marker read every other symbol,
//! advance`. Instructions whose markers are copied verbatim into an EXPANSION
//! payload are laid out before the expansion that names them, so the leftmost
//! occurrence of each marker is always its own record.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;

use super::payload::weight_value;
use super::{
    encode_payload, find_read_position, read_step, ActionKind, ExpansionPayload, Genome, PayloadLayout,
};
use crate::alphabet;
use crate::error::GenomeError;
use crate::neurocell::NetShape;

const MARKER_LEN: usize = 3;
const FILLER: u8 = b'+';

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsmOptions {
    pub layout: PayloadLayout,
    pub advance_width: usize,
}

/// Assembled program: the seed genome plus the seed cell's phenotype.
#[derive(Debug, Clone, PartialEq)]
pub struct Assembled {
    pub genome: Genome,
    pub seed: ExpansionPayload,
    /// `(label, marker, book index of the action symbol)` per instruction.
    pub labels: Vec<(String, String, usize)>,
}

#[derive(Debug, Clone)]
enum Copy {
    All,
    Range(usize, usize),
}

#[derive(Debug, Clone)]
struct Instr {
    label: String,
    line: usize,
    action: ActionKind,
    cell: Option<String>,
    child: Option<String>,
    copy: Copy,
    next: Option<String>,
}

#[derive(Debug, Clone)]
struct CellDef {
    absorption: [f64; 3],
    luminosity: f64,
    mass: Option<f64>,
    radius: f64,
    net: Option<String>,
}

fn err(line: usize, message: impl Into<String>) -> GenomeError {
    GenomeError::Asm {
        line,
        message: message.into(),
    }
}

fn parse_f64(s: &str, line: usize) -> Result<f64, GenomeError> {
    s.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| err(line, format!("expected a number, found {s:?}")))
}

fn parse_index(s: &str, prefix: char) -> Option<Option<usize>> {
    let rest = s.strip_prefix(prefix)?;
    if rest == "*" {
        Some(None)
    } else {
        rest.parse().ok().map(Some)
    }
}

/// Resolves one `target source value` line into flat weight indices.
fn net_line(
    shape: NetShape,
    target: &str,
    source: &str,
    line: usize,
) -> Result<Vec<usize>, GenomeError> {
    use crate::neurocell::port;
    let ns = shape.n_slots;
    let slots = |wild: bool| if wild { 0..ns } else { 0..1 };
    let in_port = |name: &str, k: usize| -> Option<usize> {
        Some(match name {
            "red" => port::red(ns),
            "green" => port::green(ns),
            "blue" => port::blue(ns),
            "touch" => port::touch(ns),
            "bias" => shape.n_in(),
            _ => {
                if !name.is_char_boundary(1) {
                    return None;
                }
                let (c, rest) = name.split_at(1);
                let idx = if rest == "*" { k } else { rest.parse().ok()? };
                if idx >= ns {
                    return None;
                }
                match c {
                    "s" => port::slot_s(idx),
                    "l" => port::slot_l(idx),
                    "e" => port::slot_e(idx),
                    _ => return None,
                }
            }
        })
    };
    let out_port = |name: &str, k: usize| -> Option<usize> {
        Some(match name {
            "read" => port::read(ns),
            "eat" => port::eat(ns),
            "fusion" => port::fusion(ns),
            "light" => port::light(ns),
            _ => {
                if !name.is_char_boundary(1) {
                    return None;
                }
                let (c, rest) = name.split_at(1);
                let idx = if rest == "*" { k } else { rest.parse().ok()? };
                if idx >= ns {
                    return None;
                }
                match c {
                    "s" => port::slot_s(idx),
                    "l" => port::slot_l(idx),
                    "e" => port::slot_e(idx),
                    _ => return None,
                }
            }
        })
    };
    let wild = target.contains('*') || source.contains('*');
    let mut out = Vec::new();
    for k in slots(wild) {
        if let Some(h) = parse_index(target, 'h') {
            let j = h.unwrap_or(k);
            if j >= shape.n_hidden {
                return Err(err(line, format!("hidden unit {target} out of range")));
            }
            let i = in_port(source, k).ok_or_else(|| err(line, format!("unknown input {source:?}")))?;
            out.push(shape.w_in(j, i));
        } else {
            let o = out_port(target, k).ok_or_else(|| err(line, format!("unknown target {target:?}")))?;
            let j = if source == "bias" {
                shape.n_hidden
            } else {
                match parse_index(source, 'h') {
                    Some(h) => h.unwrap_or(k),
                    None => return Err(err(line, format!("unknown hidden source {source:?}"))),
                }
            };
            if j > shape.n_hidden {
                return Err(err(line, format!("hidden unit {source} out of range")));
            }
            out.push(shape.w_out(o, j));
        }
    }
    Ok(out)
}

struct Program {
    nets: BTreeMap<String, Vec<f64>>,
    cells: BTreeMap<String, CellDef>,
    seed: Option<(String, usize)>,
    start: Option<(String, usize)>,
    instrs: Vec<Instr>,
}

fn parse(src: &str, layout: &PayloadLayout) -> Result<Program, GenomeError> {
    let shape = layout.shape;
    let mut prog = Program {
        nets: BTreeMap::new(),
        cells: BTreeMap::new(),
        seed: None,
        start: None,
        instrs: Vec::new(),
    };
    enum Block {
        None,
        Net(String, Vec<f64>, Vec<bool>),
        Cell(String, CellDef),
    }
    let mut block = Block::None;
    for (n, raw) in src.lines().enumerate() {
        let line = n + 1;
        let text = raw.split('#').next().unwrap_or("").trim();
        if text.is_empty() {
            continue;
        }
        let words: Vec<&str> = text.split_whitespace().collect();
        match &mut block {
            Block::Net(name, weights, set) => {
                if words == ["end"] {
                    let name = std::mem::take(name);
                    let weights = std::mem::take(weights);
                    if prog.nets.insert(name.clone(), weights).is_some() {
                        return Err(err(line, format!("net {name:?} defined twice")));
                    }
                    block = Block::None;
                    continue;
                }
                if words[0] == "default" && words.len() == 2 {
                    let v = parse_f64(words[1], line)?;
                    for (w, s) in weights.iter_mut().zip(set.iter()) {
                        if !s {
                            *w = v;
                        }
                    }
                    continue;
                }
                if words.len() != 3 {
                    return Err(err(line, "expected `target source value`"));
                }
                let v = parse_f64(words[2], line)?;
                for idx in net_line(shape, words[0], words[1], line)? {
                    weights[idx] = v;
                    set[idx] = true;
                }
                continue;
            }
            Block::Cell(name, def) => {
                match words.as_slice() {
                    ["end"] => {
                        let name = std::mem::take(name);
                        if prog.cells.insert(name.clone(), def.clone()).is_some() {
                            return Err(err(line, format!("cell {name:?} defined twice")));
                        }
                        block = Block::None;
                    }
                    ["absorb", r, g, b] => {
                        def.absorption = [parse_f64(r, line)?, parse_f64(g, line)?, parse_f64(b, line)?]
                    }
                    ["luminosity", v] => def.luminosity = parse_f64(v, line)?,
                    ["mass", v] => def.mass = Some(parse_f64(v, line)?),
                    ["radius", v] => def.radius = parse_f64(v, line)?,
                    ["net", v] => def.net = Some(v.to_string()),
                    _ => return Err(err(line, format!("unknown cell property {text:?}"))),
                }
                continue;
            }
            Block::None => {}
        }
        match words.as_slice() {
            ["net", name] => {
                let default = weight_value(31);
                block = Block::Net(
                    name.to_string(),
                    vec![default; shape.weight_count()],
                    vec![false; shape.weight_count()],
                );
            }
            ["cell", name] => {
                block = Block::Cell(
                    name.to_string(),
                    CellDef {
                        absorption: [0.5; 3],
                        luminosity: 0.0,
                        mass: None,
                        radius: 0.08,
                        net: None,
                    },
                )
            }
            ["seed", name] => prog.seed = Some((name.to_string(), line)),
            ["start", label] => prog.start = Some((label.to_string(), line)),
            _ => prog.instrs.push(parse_instr(&words, line)?),
        }
    }
    if !matches!(block, Block::None) {
        return Err(err(src.lines().count(), "unterminated block (missing `end`)"));
    }
    Ok(prog)
}

fn parse_instr(words: &[&str], line: usize) -> Result<Instr, GenomeError> {
    let label = words[0]
        .strip_suffix(':')
        .filter(|l| !l.is_empty())
        .ok_or_else(|| err(line, format!("expected `label: action`, found {:?}", words[0])))?;
    let action = match words.get(1).copied() {
        Some("expand") => ActionKind::Expansion,
        Some("connect") => ActionKind::Connection,
        Some("disconnect") => ActionKind::Disconnection,
        Some("transition") => ActionKind::Transition,
        other => return Err(err(line, format!("unknown action {other:?}"))),
    };
    let mut rest = &words[2..];
    let mut cell = None;
    if action == ActionKind::Expansion {
        let name = rest.first().filter(|w| !w.contains('=')).ok_or_else(|| err(line, "expand needs a cell name"))?;
        cell = Some(name.to_string());
        rest = &rest[1..];
    }
    let mut instr = Instr {
        label: label.to_string(),
        line,
        action,
        cell,
        child: None,
        copy: Copy::All,
        next: None,
    };
    for w in rest {
        let (k, v) = w.split_once('=').ok_or_else(|| err(line, format!("expected key=value, found {w:?}")))?;
        match (k, action) {
            ("next", _) => instr.next = Some(v.to_string()),
            ("child", ActionKind::Expansion) => instr.child = (v != "none").then(|| v.to_string()),
            ("copy", ActionKind::Expansion) => {
                instr.copy = if v == "all" {
                    Copy::All
                } else {
                    let (a, b) = v.split_once("..").ok_or_else(|| err(line, "copy must be `all` or `a..b`"))?;
                    let a = a.parse().map_err(|_| err(line, format!("bad copy start {a:?}")))?;
                    let b = b.parse().map_err(|_| err(line, format!("bad copy end {b:?}")))?;
                    Copy::Range(a, b)
                }
            }
            _ => return Err(err(line, format!("unexpected argument {w:?}"))),
        }
    }
    Ok(instr)
}

/// Deterministic sequence of candidate markers.
struct MarkerPool {
    state: u64,
    used: HashSet<Vec<u8>>,
}

impl MarkerPool {
    fn next(&mut self) -> Vec<u8> {
        loop {
            self.state = self.state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let v = self.state >> 40;
            let m: Vec<u8> = (0..MARKER_LEN)
                .map(|k| alphabet::symbol(((v >> (6 * k)) & 63) as u8))
                .collect();
            if m.contains(&FILLER) || m[0] == m[1] || m[1] == m[2] {
                continue;
            }
            if self.used.insert(m.clone()) {
                return m;
            }
        }
    }
}

fn layout_order(prog: &Program, index: &BTreeMap<&str, usize>) -> Result<Vec<usize>, GenomeError> {
    let n = prog.instrs.len();
    let mut indegree = vec![0usize; n];
    let mut after: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (x, ins) in prog.instrs.iter().enumerate() {
        if let Some(child) = &ins.child {
            let l = index[child.as_str()];
            if l != x {
                after[l].push(x);
                indegree[x] += 1;
            }
        }
    }
    let mut ready: std::collections::BTreeSet<usize> = (0..n).filter(|&i| indegree[i] == 0).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(i) = ready.pop_first() {
        order.push(i);
        for &x in &after[i] {
            indegree[x] -= 1;
            if indegree[x] == 0 {
                ready.insert(x);
            }
        }
    }
    if order.len() != n {
        let stuck = (0..n).find(|&i| indegree[i] > 0).unwrap_or(0);
        return Err(err(
            prog.instrs[stuck].line,
            "child-marker references form a cycle; no layout places every marker before its copies",
        ));
    }
    Ok(order)
}

pub fn assemble(src: &str, opts: &AsmOptions) -> Result<Assembled, GenomeError> {
    let layout = &opts.layout;
    if opts.advance_width == 0 {
        return Err(GenomeError::EmptyAdvance);
    }
    let prog = parse(src, layout)?;
    if prog.instrs.is_empty() {
        return Err(GenomeError::Encoding("program has no instructions".into()));
    }
    let mut index: BTreeMap<&str, usize> = BTreeMap::new();
    for (i, ins) in prog.instrs.iter().enumerate() {
        if index.insert(ins.label.as_str(), i).is_some() {
            return Err(err(ins.line, format!("label {:?} defined twice", ins.label)));
        }
    }
    let resolve = |l: &str, line: usize| {
        index
            .get(l)
            .copied()
            .ok_or_else(|| err(line, format!("unknown label {l:?}")))
    };
    let mut next = Vec::with_capacity(prog.instrs.len());
    for (i, ins) in prog.instrs.iter().enumerate() {
        next.push(match &ins.next {
            Some(l) => resolve(l, ins.line)?,
            None if i + 1 < prog.instrs.len() => i + 1,
            None => return Err(err(ins.line, "last instruction needs `next=`")),
        });
        if let Some(c) = &ins.child {
            resolve(c, ins.line)?;
        }
    }
    let payload_for = |name: &str, line: usize| -> Result<ExpansionPayload, GenomeError> {
        let def = prog
            .cells
            .get(name)
            .ok_or_else(|| err(line, format!("unknown cell {name:?}")))?;
        let weights = match &def.net {
            Some(n) => prog
                .nets
                .get(n)
                .cloned()
                .ok_or_else(|| err(line, format!("unknown net {n:?}")))?,
            None => vec![weight_value(31); layout.shape.weight_count()],
        };
        Ok(ExpansionPayload {
            absorption: def.absorption,
            luminosity: def.luminosity,
            mass: def.mass.unwrap_or(layout.mass_range.0),
            radius: def.radius,
            weights,
            copy_start: 0,
            copy_end: 0,
            child_bookmarker: Vec::new(),
        })
    };
    let (seed_name, seed_line) = prog.seed.clone().ok_or_else(|| err(1, "missing `seed <cell>`"))?;
    let seed = payload_for(&seed_name, seed_line)?;
    let (start_label, start_line) = prog.start.clone().ok_or_else(|| err(1, "missing `start <label>`"))?;
    let start = resolve(&start_label, start_line)?;
    let order = layout_order(&prog, &index)?;
    let payloads: Vec<Option<ExpansionPayload>> = prog
        .instrs
        .iter()
        .map(|ins| ins.cell.as_deref().map(|c| payload_for(c, ins.line)).transpose())
        .collect::<Result<_, _>>()?;

    let mut pool = MarkerPool {
        state: 0x5eed,
        used: HashSet::new(),
    };
    let mut markers: Vec<Vec<u8>> = (0..prog.instrs.len()).map(|_| pool.next()).collect();
    for _round in 0..10_000 {
        let (book, sites) = emit(&prog, &order, &next, &payloads, &markers, &seed, opts)?;
        let bad: Vec<usize> = (0..prog.instrs.len())
            .filter(|&i| find_read_position(&book, &markers[i]) != Some(sites[i]))
            .collect();
        if bad.is_empty() {
            let genome = Genome::new(
                book,
                markers[start].clone(),
                vec![alphabet::symbol(0); opts.advance_width],
            )?;
            let labels = prog
                .instrs
                .iter()
                .enumerate()
                .map(|(i, ins)| {
                    (
                        ins.label.clone(),
                        String::from_utf8_lossy(&markers[i]).into_owned(),
                        sites[i],
                    )
                })
                .collect();
            let (seed, _) = super::decode_expansion(&genome.book, 0, layout)?;
            return Ok(Assembled { genome, seed, labels });
        }
        for i in bad {
            markers[i] = pool.next();
        }
    }
    Err(GenomeError::Encoding("could not find collision-free markers".into()))
}

/// Lays out the Book; returns it with the action-symbol index of each instruction.
fn emit(
    prog: &Program,
    order: &[usize],
    next: &[usize],
    payloads: &[Option<ExpansionPayload>],
    markers: &[Vec<u8>],
    seed: &ExpansionPayload,
    opts: &AsmOptions,
) -> Result<(Vec<u8>, Vec<usize>), GenomeError> {
    let layout = &opts.layout;
    let mut book = encode_payload(seed, layout)?;
    let mut sites = vec![0; prog.instrs.len()];
    let mut copy_patches = Vec::new();
    for &i in order {
        let ins = &prog.instrs[i];
        book.extend_from_slice(&markers[i]);
        sites[i] = book.len();
        book.push(ins.action.symbol(0));
        if let Some(p) = &payloads[i] {
            let mut p = p.clone();
            p.child_bookmarker = ins.child.as_ref().map(|c| markers[prog_index(prog, c)].clone()).unwrap_or_default();
            copy_patches.push((book.len() + 9, ins.copy.clone(), ins.line));
            book.extend(encode_payload(&p, layout)?);
        }
        let m = &markers[next[i]];
        for (k, &s) in m.iter().enumerate() {
            book.push(s);
            if k + 1 < m.len() {
                book.push(FILLER);
            }
        }
        book.extend(std::iter::repeat(alphabet::symbol(0)).take(opts.advance_width));
    }
    let len = book.len();
    if len >= 1 << 18 {
        return Err(GenomeError::Encoding(format!("book of {len} symbols exceeds the 3-digit copy range")));
    }
    for (at, copy, line) in copy_patches {
        let (a, b) = match copy {
            Copy::All => (0, len - 1),
            Copy::Range(a, b) => (a, b),
        };
        if a >= len || b >= len {
            return Err(err(line, format!("copy range {a}..{b} outside book of {len} symbols")));
        }
        for (k, v) in [(0, a), (3, b)] {
            for d in 0..3 {
                book[at + k + d] = alphabet::symbol(((v >> (6 * (2 - d))) & 63) as u8);
            }
        }
    }
    Ok((book, sites))
}

fn prog_index(prog: &Program, label: &str) -> usize {
    prog.instrs.iter().position(|i| i.label == label).unwrap_or(0)
}

/// One line of a read trace.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceStep {
    pub position: usize,
    pub action: ActionKind,
    pub payload: Option<ExpansionPayload>,
    pub bookmarker: Vec<u8>,
    pub next_bookmarker: Vec<u8>,
    pub next_advance: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TraceEnd {
    Dormant,
    /// Returns to the state before step `k`.
    Loop(usize),
    Limit,
}

/// Follows reads from the genome's current state until it goes dormant, revisits
/// a `(bookmarker, advance)` state, or `max_steps` is reached.
pub fn trace(genome: &Genome, layout: &PayloadLayout, max_steps: usize) -> Result<(Vec<TraceStep>, TraceEnd), GenomeError> {
    let mut g = genome.clone();
    let mut seen: Vec<(Vec<u8>, Vec<u8>)> = Vec::new();
    let mut steps = Vec::new();
    for _ in 0..max_steps {
        let state = (g.bookmarker.clone(), g.advance.clone());
        if let Some(k) = seen.iter().position(|s| *s == state) {
            return Ok((steps, TraceEnd::Loop(k)));
        }
        seen.push(state);
        let Some(out) = read_step(&g, layout)? else {
            return Ok((steps, TraceEnd::Dormant));
        };
        steps.push(TraceStep {
            position: out.position,
            action: out.action,
            payload: out.payload.clone(),
            bookmarker: g.bookmarker.clone(),
            next_bookmarker: out.next_bookmarker.clone(),
            next_advance: out.next_advance.clone(),
        });
        g.apply(&out);
    }
    Ok((steps, TraceEnd::Limit))
}

fn describe(p: &ExpansionPayload) -> String {
    format!(
        "absorb=({:.3},{:.3},{:.3}) luminosity={:.3} mass={:.3} radius={:.4}",
        p.absorption[0], p.absorption[1], p.absorption[2], p.luminosity, p.mass, p.radius
    )
}

/// Human-readable listing: seed phenotype, then the read trace.
pub fn disassemble(genome: &Genome, layout: &PayloadLayout, max_steps: usize) -> Result<String, GenomeError> {
    let mut out = String::new();
    let _ = writeln!(out, "book length {}", genome.book.len());
    if !genome.book.is_empty() {
        let (seed, _) = super::decode_expansion(&genome.book, 0, layout)?;
        let _ = writeln!(out, "seed {}", describe(&seed));
    }
    let (steps, end) = trace(genome, layout, max_steps)?;
    for (k, s) in steps.iter().enumerate() {
        let _ = write!(
            out,
            "{k:4}  [{}] @{:<6} {:<13}",
            String::from_utf8_lossy(&s.bookmarker),
            s.position,
            s.action.name()
        );
        if let Some(p) = &s.payload {
            let _ = write!(
                out,
                " {} copy={}..{} child={:?}",
                describe(p),
                p.copy_start,
                p.copy_end,
                String::from_utf8_lossy(&p.child_bookmarker)
            );
        }
        let _ = writeln!(
            out,
            " -> [{}] advance {}",
            String::from_utf8_lossy(&s.next_bookmarker),
            String::from_utf8_lossy(&s.next_advance)
        );
    }
    let _ = match end {
        TraceEnd::Dormant => writeln!(out, "dormant"),
        TraceEnd::Loop(k) => writeln!(out, "loops to step {k}"),
        TraceEnd::Limit => writeln!(out, "stopped after {max_steps} reads"),
    };
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts() -> AsmOptions {
        AsmOptions {
            layout: PayloadLayout::new(NetShape::new(6, 8), 8),
            advance_width: 1,
        }
    }

    const LOOP: &str = "
cell c
  radius 0.1
end
seed c
start grow
grow: expand c child=grow next=grow
";

    #[test]
    fn single_expansion_loops_forever() {
        let a = assemble(LOOP, &opts()).unwrap();
        let l = opts().layout;
        let (steps, end) = trace(&a.genome, &l, 10).unwrap();
        assert_eq!(end, TraceEnd::Loop(0));
        assert_eq!(steps.len(), 1);
        assert_eq!(steps[0].action, ActionKind::Expansion);
        let p = steps[0].payload.as_ref().unwrap();
        assert_eq!(p.child_bookmarker, a.genome.bookmarker);
        assert_eq!((p.copy_start, p.copy_end), (0, a.genome.book.len() - 1));
    }

    #[test]
    fn empty_program_is_an_error() {
        assert!(assemble("", &opts()).is_err());
        assert!(assemble("cell c\nend\nseed c\n", &opts()).is_err());
    }

    #[test]
    fn trace_follows_source_sequence() {
        let src = "
cell c
  radius 0.1
end
seed c
start a
a: connect
b: transition
c: disconnect
d: expand c child=a next=a
";
        let asm = assemble(src, &opts()).unwrap();
        let (steps, end) = trace(&asm.genome, &opts().layout, 20).unwrap();
        let kinds: Vec<ActionKind> = steps.iter().map(|s| s.action).collect();
        assert_eq!(
            kinds,
            vec![
                ActionKind::Connection,
                ActionKind::Transition,
                ActionKind::Disconnection,
                ActionKind::Expansion
            ]
        );
        assert_eq!(end, TraceEnd::Loop(0));
        for (label, marker, site) in &asm.labels {
            assert_eq!(
                find_read_position(&asm.genome.book, marker.as_bytes()),
                Some(*site),
                "label {label}"
            );
        }
    }

    #[test]
    fn net_block_sets_weights() {
        let src = "
net n
  h0 red 1
  h0 bias -0.5
  read h0 1
  h* s* -1
end
cell c
  net n
end
seed c
start a
a: transition next=a
";
        let o = opts();
        let a = assemble(src, &o).unwrap();
        let s = o.layout.shape;
        let w = &a.seed.weights;
        use crate::neurocell::port;
        assert_eq!(w[s.w_in(0, port::red(6))], 1.0);
        assert!((w[s.w_in(0, s.n_in())] + 0.5).abs() <= 1.0 / 63.0);
        assert_eq!(w[s.w_out(port::read(6), 0)], 1.0);
        for k in 0..6 {
            assert_eq!(w[s.w_in(k, port::slot_s(k))], -1.0);
        }
        assert_eq!(w[s.w_in(1, port::red(6))], weight_value(31));
    }

    #[test]
    fn errors_carry_line_numbers() {
        let e = assemble("cell c\nend\nseed c\nstart a\na: jump\n", &opts()).unwrap_err();
        assert!(matches!(e, GenomeError::Asm { line: 5, .. }));
        let e = assemble("cell c\n radius 0.5\nend\nseed c\nstart a\na: transition next=a\n", &opts()).unwrap_err();
        assert!(matches!(e, GenomeError::Encoding(_)));
        let e = assemble("cell c\nend\nseed c\nstart a\na: transition next=zz\n", &opts()).unwrap_err();
        assert!(matches!(e, GenomeError::Asm { line: 5, .. }));
    }

    #[test]
    fn cyclic_child_references_are_rejected() {
        let src = "
cell c
end
seed c
start a
a: expand c child=b next=b
b: expand c child=a next=a
";
        assert!(assemble(src, &opts()).is_err());
    }

    #[test]
    fn disassembly_mentions_every_action() {
        let a = assemble(LOOP, &opts()).unwrap();
        let text = disassemble(&a.genome, &opts().layout, 8).unwrap();
        assert!(text.contains("EXPANSION"));
        assert!(text.contains("loops to step 0"));
    }
}
