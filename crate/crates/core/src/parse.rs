use crate::error::{Error, ParseErrorKind, Result};
use crate::model::{Criterion, ModelTables, PosgModel};
use crate::scalar::Scalar;

#[derive(Debug, Clone)]
struct Token {
    text: String,
    col: usize,
}

fn tokenize(line: &str) -> Vec<Token> {
    let mut out = Vec::new();
    let mut current = String::new();
    let mut start = 0;
    for (k, ch) in line.chars().enumerate() {
        let col = k + 1;
        if ch.is_whitespace() || ch == ':' {
            if !current.is_empty() {
                out.push(Token { text: std::mem::take(&mut current), col: start });
            }
            if ch == ':' {
                out.push(Token { text: ":".into(), col });
            }
        } else {
            if current.is_empty() {
                start = col;
            }
            current.push(ch);
        }
    }
    if !current.is_empty() {
        out.push(Token { text: current, col: start });
    }
    out
}

struct Line {
    number: usize,
    tokens: Vec<Token>,
    end_col: usize,
}

enum Slot {
    Any,
    One(usize),
}

impl Slot {
    fn expand(&self, n: usize) -> Vec<usize> {
        match self {
            Slot::Any => (0..n).collect(),
            Slot::One(k) => vec![*k],
        }
    }
}

#[derive(Default)]
struct Builder {
    n_agents: Option<usize>,
    discount: Option<f64>,
    horizon: Option<usize>,
    criterion: Option<Criterion>,
    states: Option<Vec<String>>,
    actions: Option<Vec<Vec<String>>>,
    private_obs: Option<Vec<Vec<String>>>,
    public_obs: Option<Vec<String>>,
    start: Option<Vec<f64>>,
    transition: Vec<f64>,
    observation: Vec<f64>,
    rewards: Vec<f64>,
    tables_ready: bool,
    observation_seen: bool,
}

fn err<T>(line: usize, col: usize, kind: ParseErrorKind) -> Result<T> {
    Err(Error::parse(line, col, kind))
}

fn syntax<T>(line: usize, col: usize, msg: impl Into<String>) -> Result<T> {
    err(line, col, ParseErrorKind::Syntax(msg.into()))
}

fn dimension<T>(line: usize, col: usize, msg: impl Into<String>) -> Result<T> {
    err(line, col, ParseErrorKind::DimensionMismatch(msg.into()))
}

/// Splits tokens after the leading `key :` into `:`-separated groups.
fn groups(tokens: &[Token]) -> Vec<Vec<Token>> {
    let mut out = vec![Vec::new()];
    for t in tokens {
        if t.text == ":" {
            out.push(Vec::new());
        } else {
            out.last_mut().expect("non-empty").push(t.clone());
        }
    }
    out
}

fn parse_number(line: usize, tok: &Token) -> Result<f64> {
    tok.text
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .map_or_else(|| syntax(line, tok.col, format!("expected a number, found {:?}", tok.text)), Ok)
}

fn parse_count(line: usize, tok: &Token) -> Result<usize> {
    tok.text
        .parse::<usize>()
        .map_or_else(|_| syntax(line, tok.col, format!("expected a count, found {:?}", tok.text)), Ok)
}

fn labels(line: usize, toks: &[Token], what: &str) -> Result<Vec<String>> {
    if toks.is_empty() {
        return syntax(line, toks.first().map_or(1, |t| t.col), format!("{what} needs at least one label"));
    }
    let mut out: Vec<String> = Vec::new();
    for t in toks {
        if t.text == "*" {
            return syntax(line, t.col, "\"*\" is reserved for wildcards");
        }
        if out.contains(&t.text) {
            return err(line, t.col, ParseErrorKind::Duplicate(format!("label {}", t.text)));
        }
        out.push(t.text.clone());
    }
    Ok(out)
}

fn lookup(line: usize, tok: &Token, table: &[String], what: &str) -> Result<Slot> {
    if tok.text == "*" {
        return Ok(Slot::Any);
    }
    table
        .iter()
        .position(|l| *l == tok.text)
        .map(Slot::One)
        .map_or_else(
            || err(line, tok.col, ParseErrorKind::UnknownLabel(format!("{} ({what})", tok.text))),
            Ok,
        )
}

impl Builder {
    fn require<'a, T>(&self, v: &'a Option<T>, line: usize, col: usize, what: &str) -> Result<&'a T> {
        v.as_ref()
            .map_or_else(|| syntax(line, col, format!("{what} must be declared first")), Ok)
    }

    fn set_once<T>(slot: &mut Option<T>, v: T, line: usize, col: usize, key: &str) -> Result<()> {
        if slot.is_some() {
            return err(line, col, ParseErrorKind::Duplicate(key.to_string()));
        }
        *slot = Some(v);
        Ok(())
    }

    fn structure_locked(&self, line: usize, col: usize, key: &str) -> Result<()> {
        if self.tables_ready {
            return syntax(line, col, format!("{key} must precede T, O and R entries"));
        }
        Ok(())
    }

    fn ensure_tables(&mut self, line: usize, col: usize) -> Result<()> {
        if self.tables_ready {
            return Ok(());
        }
        let n = *self.require(&self.n_agents, line, col, "agents")?;
        let nx = self.require(&self.states, line, col, "states")?.len();
        let nu: usize = self.require(&self.actions, line, col, "actions")?.iter().map(Vec::len).product();
        let nz_private: usize =
            self.require(&self.private_obs, line, col, "observations")?.iter().map(Vec::len).product();
        let nw = self.public_obs.as_ref().map_or(1, Vec::len);
        self.transition = vec![0.0; nu * nx * nx];
        self.observation = vec![0.0; nu * nx * nw * nz_private];
        self.rewards = vec![0.0; n * nx * nu];
        self.tables_ready = true;
        Ok(())
    }

    fn joint_actions(&self, line: usize, toks: &[Token], end_col: usize) -> Result<Vec<usize>> {
        let actions = self.actions.as_ref().expect("checked");
        if toks.len() != actions.len() {
            let col = toks.first().map_or(end_col, |t| t.col);
            return dimension(
                line,
                col,
                format!("expected {} action labels, found {}", actions.len(), toks.len()),
            );
        }
        let slots = toks
            .iter()
            .zip(actions)
            .map(|(t, labels)| Ok(lookup(line, t, labels, "action")?.expand(labels.len())))
            .collect::<Result<Vec<_>>>()?;
        let radices: Vec<usize> = actions.iter().map(Vec::len).collect();
        Ok(cartesian(&slots)
            .into_iter()
            .map(|digits| digits.iter().zip(&radices).fold(0, |acc, (&d, &r)| acc * r + d))
            .collect())
    }

    fn state_slot(&self, line: usize, toks: &[Token], end_col: usize) -> Result<Vec<usize>> {
        let states = self.states.as_ref().expect("checked");
        if toks.len() != 1 {
            let col = toks.first().map_or(end_col, |t| t.col);
            return dimension(line, col, format!("expected one state label, found {}", toks.len()));
        }
        Ok(lookup(line, &toks[0], states, "state")?.expand(states.len()))
    }

    fn value(&self, line: usize, toks: &[Token], end_col: usize) -> Result<f64> {
        if toks.len() != 1 {
            let col = toks.first().map_or(end_col, |t| t.col);
            return dimension(line, col, format!("expected one number, found {}", toks.len()));
        }
        parse_number(line, &toks[0])
    }

    fn entry_t(&mut self, l: &Line, rest: &[Token]) -> Result<()> {
        self.ensure_tables(l.number, l.tokens[0].col)?;
        let g = groups(rest);
        if g.len() != 4 {
            return syntax(l.number, l.tokens[0].col, "T entries read `T: actions : s : s' : p`");
        }
        let us = self.joint_actions(l.number, &g[0], l.end_col)?;
        let xs = self.state_slot(l.number, &g[1], l.end_col)?;
        let x2s = self.state_slot(l.number, &g[2], l.end_col)?;
        let p = self.value(l.number, &g[3], l.end_col)?;
        let nx = self.states.as_ref().expect("checked").len();
        for &u in &us {
            for &x in &xs {
                for &x2 in &x2s {
                    self.transition[(u * nx + x) * nx + x2] = p;
                }
            }
        }
        Ok(())
    }

    fn entry_o(&mut self, l: &Line, rest: &[Token]) -> Result<()> {
        self.ensure_tables(l.number, l.tokens[0].col)?;
        self.observation_seen = true;
        let g = groups(rest);
        if g.len() != 4 {
            return syntax(l.number, l.tokens[0].col, "O entries read `O: actions : s' : observations : p`");
        }
        let us = self.joint_actions(l.number, &g[0], l.end_col)?;
        let x2s = self.state_slot(l.number, &g[1], l.end_col)?;
        let p = self.value(l.number, &g[3], l.end_col)?;
        let private = self.private_obs.as_ref().expect("checked");
        let default_public = vec!["none".to_string()];
        let public = self.public_obs.as_ref().unwrap_or(&default_public);
        let n = private.len();
        let obs = &g[2];
        let (public_slot, private_toks) = if obs.len() == n + 1 {
            (lookup(l.number, &obs[0], public, "public observation")?.expand(public.len()), &obs[1..])
        } else if obs.len() == n && public.len() == 1 {
            (vec![0], &obs[..])
        } else {
            let col = obs.first().map_or(l.end_col, |t| t.col);
            let want = if public.len() == 1 { format!("{n}") } else { format!("{}", n + 1) };
            return dimension(l.number, col, format!("expected {want} observation labels, found {}", obs.len()));
        };
        let mut slots = vec![public_slot];
        for (t, labels) in private_toks.iter().zip(private) {
            slots.push(lookup(l.number, t, labels, "observation")?.expand(labels.len()));
        }
        let radices: Vec<usize> = std::iter::once(public.len()).chain(private.iter().map(Vec::len)).collect();
        let nz: usize = radices.iter().product();
        let nx = self.states.as_ref().expect("checked").len();
        let zs: Vec<usize> = cartesian(&slots)
            .into_iter()
            .map(|d| d.iter().zip(&radices).fold(0, |acc, (&v, &r)| acc * r + v))
            .collect();
        for &u in &us {
            for &x2 in &x2s {
                for &z in &zs {
                    self.observation[(u * nx + x2) * nz + z] = p;
                }
            }
        }
        Ok(())
    }

    fn entry_r(&mut self, l: &Line, agent_tok: &Token, rest: &[Token]) -> Result<()> {
        self.ensure_tables(l.number, l.tokens[0].col)?;
        let n = self.n_agents.expect("checked");
        let agent = agent_tok.text[1..]
            .parse::<usize>()
            .map_or_else(|_| syntax(l.number, agent_tok.col, "reward keys read R<agent>"), Ok)?;
        if agent == 0 || agent > n {
            return dimension(l.number, agent_tok.col, format!("agent {agent} outside 1..={n}"));
        }
        let g = groups(rest);
        if g.len() != 3 {
            return syntax(l.number, agent_tok.col, "R entries read `R<i>: actions : s : value`");
        }
        let us = self.joint_actions(l.number, &g[0], l.end_col)?;
        let xs = self.state_slot(l.number, &g[1], l.end_col)?;
        let v = self.value(l.number, &g[2], l.end_col)?;
        let nx = self.states.as_ref().expect("checked").len();
        let nu: usize = self.actions.as_ref().expect("checked").iter().map(Vec::len).product();
        for &u in &us {
            for &x in &xs {
                self.rewards[((agent - 1) * nx + x) * nu + u] = v;
            }
        }
        Ok(())
    }
}

fn cartesian(slots: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for slot in slots {
        let mut next = Vec::with_capacity(out.len() * slot.len());
        for prefix in &out {
            for &v in slot {
                let mut p = prefix.clone();
                p.push(v);
                next.push(p);
            }
        }
        out = next;
    }
    out
}

/// Parses a `.posg` model description.
///
/// Missing transition, observation and reward entries default to 0, the
/// discount to 1, the horizon to 1, the start belief to uniform and the
/// public observation space to the singleton `none`.
pub fn parse_posg<S: Scalar>(text: &str) -> Result<PosgModel<S>> {
    let lines: Vec<Line> = text
        .lines()
        .enumerate()
        .map(|(k, raw)| {
            let content = raw.split('#').next().unwrap_or("");
            Line {
                number: k + 1,
                tokens: tokenize(content),
                end_col: content.chars().count() + 1,
            }
        })
        .filter(|l| !l.tokens.is_empty())
        .collect();

    let mut b = Builder::default();
    let mut idx = 0;
    while idx < lines.len() {
        let l = &lines[idx];
        idx += 1;
        let key = &l.tokens[0];
        if l.tokens.len() < 2 || l.tokens[1].text != ":" {
            return syntax(l.number, key.col, format!("expected `{}:`", key.text));
        }
        let rest = &l.tokens[2..];
        let n = l.number;
        match key.text.as_str() {
            "agents" => {
                b.structure_locked(n, key.col, "agents")?;
                if rest.len() != 1 {
                    return syntax(n, key.col, "agents takes one count");
                }
                let v = parse_count(n, &rest[0])?;
                if v == 0 {
                    return syntax(n, rest[0].col, "at least one agent is required");
                }
                Builder::set_once(&mut b.n_agents, v, n, key.col, "agents")?;
            }
            "discount" => {
                if rest.len() != 1 {
                    return syntax(n, key.col, "discount takes one number");
                }
                let v = parse_number(n, &rest[0])?;
                if !(0.0..=1.0).contains(&v) {
                    return syntax(n, rest[0].col, "discount must lie in [0, 1]");
                }
                Builder::set_once(&mut b.discount, v, n, key.col, "discount")?;
            }
            "horizon" => {
                if rest.len() != 1 {
                    return syntax(n, key.col, "horizon takes one count");
                }
                let v = parse_count(n, &rest[0])?;
                if v == 0 {
                    return syntax(n, rest[0].col, "horizon must be at least 1");
                }
                Builder::set_once(&mut b.horizon, v, n, key.col, "horizon")?;
            }
            "criterion" => {
                if rest.len() != 1 {
                    return syntax(n, key.col, "criterion takes one name");
                }
                let c = rest[0]
                    .text
                    .parse::<Criterion>()
                    .map_or_else(|_| syntax(n, rest[0].col, format!("unknown criterion {}", rest[0].text)), Ok)?;
                Builder::set_once(&mut b.criterion, c, n, key.col, "criterion")?;
            }
            "states" => {
                b.structure_locked(n, key.col, "states")?;
                let v = labels(n, rest, "states")?;
                Builder::set_once(&mut b.states, v, n, key.col, "states")?;
            }
            "public-observations" => {
                b.structure_locked(n, key.col, "public-observations")?;
                if b.observation_seen {
                    return syntax(n, key.col, "public-observations must precede O entries");
                }
                let v = labels(n, rest, "public-observations")?;
                Builder::set_once(&mut b.public_obs, v, n, key.col, "public-observations")?;
            }
            "actions" | "observations" => {
                let name = key.text.clone();
                b.structure_locked(n, key.col, &name)?;
                let agents = *b.require(&b.n_agents, n, key.col, "agents")?;
                let mut per_agent = Vec::with_capacity(agents);
                if !rest.is_empty() {
                    per_agent.push(labels(n, rest, &name)?);
                }
                while per_agent.len() < agents {
                    let Some(next) = lines.get(idx) else {
                        return dimension(n, key.col, format!("{name} needs {agents} lines of labels"));
                    };
                    if next.tokens.iter().any(|t| t.text == ":") {
                        return dimension(
                            next.number,
                            next.tokens[0].col,
                            format!("{name} needs {agents} lines of labels, found {}", per_agent.len()),
                        );
                    }
                    per_agent.push(labels(next.number, &next.tokens, &name)?);
                    idx += 1;
                }
                let slot = if name == "actions" { &mut b.actions } else { &mut b.private_obs };
                Builder::set_once(slot, per_agent, n, key.col, &name)?;
            }
            "start" => {
                let nx = b.require(&b.states, n, key.col, "states")?.len();
                let v = if rest.len() == 1 && rest[0].text == "uniform" {
                    vec![1.0 / nx as f64; nx]
                } else {
                    if rest.len() != nx {
                        let col = rest.first().map_or(l.end_col, |t| t.col);
                        return dimension(n, col, format!("start needs {nx} probabilities, found {}", rest.len()));
                    }
                    rest.iter().map(|t| parse_number(n, t)).collect::<Result<Vec<_>>>()?
                };
                Builder::set_once(&mut b.start, v, n, key.col, "start")?;
            }
            "T" => b.entry_t(l, rest)?,
            "O" => b.entry_o(l, rest)?,
            k if k.starts_with('R') && k.len() > 1 => b.entry_r(l, key, rest)?,
            other => return syntax(n, key.col, format!("unknown key {other}")),
        }
    }

    let eof = lines.last().map_or(1, |l| l.number);
    let n_agents = *b.require(&b.n_agents, eof, 1, "agents")?;
    b.require(&b.states, eof, 1, "states")?;
    b.require(&b.actions, eof, 1, "actions")?;
    b.require(&b.private_obs, eof, 1, "observations")?;
    b.ensure_tables(eof, 1)?;
    let states = b.states.take().expect("checked");
    let nx = states.len();
    let cast = |v: &[f64]| v.iter().map(|&x| S::lit(x)).collect::<Vec<S>>();
    let tables = ModelTables {
        transition: cast(&b.transition),
        observation: cast(&b.observation),
        rewards: cast(&b.rewards),
        start: cast(&b.start.take().unwrap_or_else(|| vec![1.0 / nx as f64; nx])),
        states,
        actions: b.actions.take().expect("checked"),
        private_obs: b.private_obs.take().expect("checked"),
        public_obs: b.public_obs.take().unwrap_or_default(),
        discount: S::lit(b.discount.unwrap_or(1.0)),
        horizon: b.horizon.unwrap_or(1),
        criterion: b.criterion,
    };
    debug_assert_eq!(tables.actions.len(), n_agents);
    PosgModel::from_tables(tables)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "agents: 1\nstates: only\nactions:\nact\nobservations:\nsee\nT: * : * : * : 1\nO: * : * : * : 1\n";

    #[test]
    fn minimal_model_parses() {
        let m: PosgModel<f64> = parse_posg(MINIMAL).unwrap();
        assert_eq!(m.n_states(), 1);
        assert_eq!(m.transition(0, 0, 0), 1.0);
        assert_eq!(m.horizon(), 1);
        assert_eq!(m.public_label(0), "none");
    }

    #[test]
    fn unknown_label_reports_position() {
        let text = MINIMAL.replace("T: * : * : * : 1", "T: act : nowhere : * : 1");
        match parse_posg::<f64>(&text) {
            Err(Error::Parse { line, col, kind: ParseErrorKind::UnknownLabel(_) }) => {
                assert_eq!(line, 7);
                assert_eq!(col, 10);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn duplicate_header_is_rejected() {
        let text = format!("{MINIMAL}states: again\n");
        assert!(matches!(
            parse_posg::<f64>(&text),
            Err(Error::Parse { kind: ParseErrorKind::Duplicate(_), .. }) | Err(Error::Parse { kind: ParseErrorKind::Syntax(_), .. })
        ));
        let text = "agents: 1\nagents: 1\n";
        assert!(matches!(
            parse_posg::<f64>(text),
            Err(Error::Parse { line: 2, kind: ParseErrorKind::Duplicate(_), .. })
        ));
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let text = MINIMAL.replace("T: * : * : * : 1", "T: act act : * : * : 1");
        assert!(matches!(
            parse_posg::<f64>(&text),
            Err(Error::Parse { kind: ParseErrorKind::DimensionMismatch(_), .. })
        ));
    }

    #[test]
    fn syntax_error_is_reported() {
        let text = MINIMAL.replace("T: * : * : * : 1", "T: * : * : * : one");
        assert!(matches!(
            parse_posg::<f64>(&text),
            Err(Error::Parse { line: 7, kind: ParseErrorKind::Syntax(_), .. })
        ));
    }

    #[test]
    fn tokenizer_splits_colons() {
        let t = tokenize("T: a b:c");
        let texts: Vec<_> = t.iter().map(|t| t.text.as_str()).collect();
        assert_eq!(texts, ["T", ":", "a", "b", ":", "c"]);
        assert_eq!(t[5].col, 8);
    }
}
