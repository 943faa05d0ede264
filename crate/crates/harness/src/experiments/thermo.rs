use rand::Rng;
use serde::Serialize;

use phygital_core::thermo::{ceiling_sweep, EnergyLedger, Pool, TransductionSpec};

use super::Output;
use crate::config::{CeilingCfg, ThermoCfg};
use crate::output::{num, Table};
use crate::seed::Seeder;

const ACTIVE: [Pool; 3] = [Pool::Phy, Pool::Dig, Pool::Soc];

fn pool_tag(p: Pool) -> &'static str {
    match p {
        Pool::Phy => "phy",
        Pool::Dig => "dig",
        Pool::Soc => "soc",
        Pool::Waste => "waste",
    }
}

struct Book {
    rows: Vec<Vec<String>>,
    initial: f64,
    max_rel_error: f64,
    last_s_env: f64,
    s_env_monotone: bool,
}

impl Book {
    fn record(&mut self, ledger: &EnergyLedger, mut row: Vec<String>) {
        let total = ledger.total();
        let err = (total - self.initial).abs() / self.initial.abs().max(f64::MIN_POSITIVE);
        self.max_rel_error = self.max_rel_error.max(err);
        let s_env = ledger.s_env();
        self.s_env_monotone &= s_env >= self.last_s_env;
        self.last_s_env = s_env;
        row.extend([num(total), num(s_env), num(err)]);
        self.rows.push(row);
    }
}

pub fn ledger(cfg: &ThermoCfg, seeder: &Seeder) -> phygital_core::Result<Output> {
    let mut ledger = EnergyLedger::new();
    for a in &cfg.accounts {
        ledger.open_account(a.entity.clone(), a.pools)?;
    }
    let mut book = Book { rows: Vec::new(), initial: ledger.total(), max_rel_error: 0.0, last_s_env: ledger.s_env(), s_env_monotone: true };
    let mut op = 0usize;
    let mut push = |book: &mut Book, ledger: &EnergyLedger, cols: [String; 8]| {
        let mut row = vec![op.to_string()];
        row.extend(cols);
        book.record(ledger, row);
        op += 1;
    };

    for t in &cfg.transductions {
        let spec = TransductionSpec { entity: t.entity.clone(), source: t.from, destination: t.to, amount: t.amount, friction: t.friction };
        let tr = ledger.transduce(&spec)?;
        push(&mut book, &ledger, [
            "transduce".into(), t.entity.clone(), pool_tag(t.from).into(), pool_tag(t.to).into(),
            num(t.amount), num(t.friction), num(tr.delivered), num(tr.dissipated),
        ]);
    }
    for o in &cfg.order {
        ledger.record_order_creation(&o.entity, o.delta_s, o.overhead)?;
        push(&mut book, &ledger, [
            "order".into(), o.entity.clone(), String::new(), String::new(),
            num(o.delta_s), String::new(), String::new(), num(o.overhead),
        ]);
    }
    if let Some(r) = &cfg.random {
        let mut rng = seeder.rng("thermo/random");
        let ids: Vec<String> = cfg.accounts.iter().map(|a| a.entity.clone()).collect();
        let mut done = 0;
        let mut attempts = 0;
        while done < r.count && attempts < r.count * 10 {
            attempts += 1;
            let entity = &ids[rng.random_range(0..ids.len())];
            let s = rng.random_range(0..3);
            let d = (s + rng.random_range(1..3)) % 3;
            let (source, destination) = (ACTIVE[s], ACTIVE[d]);
            let available = ledger.account(entity)?.omega.get(source);
            let amount = available * rng.random_range(0.0..r.max_fraction);
            let friction = rng.random_range(0.0..=r.max_friction);
            if amount <= 0.0 {
                continue;
            }
            let spec = TransductionSpec { entity: entity.clone(), source, destination, amount, friction };
            let tr = ledger.transduce(&spec)?;
            push(&mut book, &ledger, [
                "random".into(), entity.clone(), pool_tag(source).into(), pool_tag(destination).into(),
                num(amount), num(friction), num(tr.delivered), num(tr.dissipated),
            ]);
            done += 1;
        }
    }

    #[derive(Serialize)]
    struct Summary {
        operations: usize,
        initial_total: f64,
        final_total: f64,
        max_relative_error: f64,
        s_env: f64,
        s_env_monotone: bool,
    }
    let summary = Summary {
        operations: book.rows.len(),
        initial_total: book.initial,
        final_total: ledger.total(),
        max_relative_error: book.max_rel_error,
        s_env: ledger.s_env(),
        s_env_monotone: book.s_env_monotone,
    };
    let mut out = Output::default();
    if summary.max_relative_error > 1e-12 {
        out.warn(format!("ledger total drifted by {:e} (relative)", summary.max_relative_error));
    }
    out.tables.push(Table::csv(
        "ledger.csv",
        ["op", "kind", "entity", "from", "to", "amount", "friction", "delivered", "dissipated", "total", "s_env", "rel_error"],
        book.rows,
    ));
    out.tables.push(Table::json("snapshot.json", &ledger.snapshot()));
    out.tables.push(Table::json("summary.json", &summary));
    Ok(out)
}

pub fn ceiling(cfg: &CeilingCfg) -> phygital_core::Result<Output> {
    let sweep = ceiling_sweep(&cfg.grid, cfg.alpha, cfg.beta, cfg.gamma)?;
    #[derive(Serialize)]
    struct Summary {
        argmax_n: f64,
        max_net: f64,
        unimodal: bool,
        interior: bool,
        /// `β/α − 1`, the continuous optimum for γ = 1.
        analytic_argmax: Option<f64>,
    }
    let best = sweep.rows[sweep.argmax];
    let summary = Summary {
        argmax_n: best.n,
        max_net: best.net,
        unimodal: sweep.unimodal,
        interior: sweep.interior,
        analytic_argmax: (cfg.gamma == 1.0 && cfg.alpha > 0.0).then(|| cfg.beta / cfg.alpha - 1.0),
    };
    let mut out = Output::default();
    if !sweep.interior {
        out.warn("ceiling optimum sits on the edge of the catalog grid");
    }
    out.tables.push(Table::csv(
        "ceiling.csv",
        ["n", "value", "social_entropy", "net"],
        sweep.rows.iter().map(|r| vec![num(r.n), num(r.value), num(r.social_entropy), num(r.net)]).collect(),
    ));
    out.tables.push(Table::json("summary.json", &summary));
    Ok(out)
}
