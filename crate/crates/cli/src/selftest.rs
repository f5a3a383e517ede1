//! Built-in invariant suite behind `ukh selftest`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use ukh_core::cobordism::{
    compose, move_two_handles, reduce_half_t, reduce_z, relation_terms, CircleConfig, CobMor, Component, Port,
    RelationKind, SurfaceGen,
};
use ukh_core::complex::build_cube;
use ukh_core::homology::{naive_numeric, promote_numeric, state_sum};
use ukh_core::links;
use ukh_core::promote::{frobenius_checks, FrobeniusSystem, Preset, PresetSpec};
use ukh_core::reduce::{deloop_iso_q, deloop_iso_z, reduce_pipeline, AlgebraTablesQ, AlgebraTablesZ, Label};
use ukh_core::{MultiPoly, Poly, Ring, QT, ZH};

type Check = Result<String, String>;

fn random_surface(rng: &mut ChaCha8Rng) -> (CircleConfig, CircleConfig, SurfaceGen) {
    let a = rng.gen_range(0..=3usize);
    let b = rng.gen_range(if a == 0 { 1 } else { 0 }..=3usize);
    let source = CircleConfig::new(a, (a > 0).then(|| rng.gen_range(0..a)));
    let target = CircleConfig::new(b, (a == 0).then(|| rng.gen_range(0..b)));
    let k = rng.gen_range(1..=4usize);
    let mut ports: Vec<Vec<Port>> = vec![Vec::new(); k];
    for i in 0..a as u32 {
        ports[rng.gen_range(0..k)].push(Port::In(i));
    }
    for j in 0..b as u32 {
        ports[rng.gen_range(0..k)].push(Port::Out(j));
    }
    let comps = ports.into_iter().map(|p| Component::new(rng.gen_range(0..=3), p)).collect();
    (source, target, SurfaceGen::new(comps))
}

fn relations() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for i in 0..600 {
        let (s, t, g) = random_surface(&mut rng);
        let k = g.components().len();
        let kind = [RelationKind::FourTu, RelationKind::ThreeS1, RelationKind::Nc][i % 3];
        let n_sites = match kind {
            RelationKind::FourTu => 4,
            RelationKind::ThreeS1 => 3,
            RelationKind::Nc => 2,
        };
        let sites: Vec<usize> = (0..n_sites).map(|_| rng.gen_range(0..k)).collect();
        let zero = if kind == RelationKind::Nc {
            let r: CobMor<QT> = relation_terms(kind, s, t, &g, &sites).map_err(|e| e.to_string())?;
            reduce_half_t(&r).is_zero()
        } else {
            let r: CobMor<ZH> = relation_terms(kind, s, t, &g, &sites).map_err(|e| e.to_string())?;
            reduce_z(&r).map_err(|e| e.to_string())?.is_zero()
        };
        if !zero {
            return Err(format!("{kind:?} at {sites:?} on {g:?} survives reduction"));
        }
    }
    Ok("600 random 4TU/3S1/NC instances vanish".into())
}

fn handle_moves() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut n = 0;
    while n < 300 {
        let (s, t, g) = random_surface(&mut rng);
        let k = g.components().len();
        if k < 2 {
            continue;
        }
        let mut comps = g.components().to_vec();
        let pick = rng.gen_range(0..k);
        comps[pick].genus += 2;
        let g = SurfaceGen::new(comps);
        let from = g.components().iter().position(|c| c.genus >= 2).unwrap();
        let to = (from + 1) % k;
        let moved = move_two_handles(&g, from, to).ok_or("move rejected")?;
        let a = reduce_z(&CobMor::from_gen(s, t, g, ZH::from_i64(1)).unwrap()).map_err(|e| e.to_string())?;
        let b = reduce_z(&CobMor::from_gen(s, t, moved, ZH::from_i64(1)).unwrap()).map_err(|e| e.to_string())?;
        if a != b {
            return Err(format!("{a} vs {b}"));
        }
        n += 1;
    }
    Ok(format!("{n} two-handle moves preserve normal forms"))
}

fn delooping() -> Check {
    let mut n = 0;
    for (count, special) in [(2, Some(0)), (3, Some(1)), (1, None), (2, None)] {
        let cfg = CircleConfig::new(count, special);
        for circle in (0..count).filter(|&c| Some(c) != special) {
            if special.is_some() {
                let iso = deloop_iso_z(cfg, circle).map_err(|e| e.to_string())?;
                let sum = compose(&iso.p_minus, &iso.i_minus).unwrap().add(&compose(&iso.p_plus, &iso.i_plus).unwrap()).unwrap();
                let pi = reduce_z(&compose(&iso.i_plus, &iso.p_minus).unwrap()).unwrap();
                if reduce_z(&sum).unwrap() != reduce_z(&CobMor::identity(cfg)).unwrap() || !pi.is_zero() {
                    return Err(format!("Z[H] delooping of circle {circle} in {cfg:?}"));
                }
            }
            let iso = deloop_iso_q(cfg, circle).map_err(|e| e.to_string())?;
            let sum = compose(&iso.p_minus, &iso.i_minus).unwrap().add(&compose(&iso.p_plus, &iso.i_plus).unwrap()).unwrap();
            let pi = reduce_half_t(&compose(&iso.i_plus, &iso.p_minus).unwrap());
            if reduce_half_t(&sum) != reduce_half_t(&CobMor::identity(cfg)) || !pi.is_zero() {
                return Err(format!("Z[1/2,T] delooping of circle {circle} in {cfg:?}"));
            }
            n += 1;
        }
    }
    Ok(format!("{n} delooping round trips"))
}

fn tables() -> Check {
    let zh = |s: &str| s.parse::<ZH>().unwrap();
    let qt = |s: &str| s.parse::<QT>().unwrap();
    let (m, p) = (Label::Minus as usize, Label::Plus as usize);
    let z = AlgebraTablesZ::compute();
    let q = AlgebraTablesQ::compute();
    let ok = z.m1[m][m] == [zh("H"), zh("0")]
        && z.m1[p][p] == [zh("0"), zh("1")]
        && z.delta1[p] == [[zh("0"), zh("1")], [zh("1"), zh("-H")]]
        && z.phi == [zh("H"), zh("1")]
        && z.psi == [zh("1"), zh("0")]
        && q.m2[m][m] == [qt("0"), qt("1/4*T")]
        && q.delta2[m] == [[qt("1"), qt("0")], [qt("0"), qt("1/4*T")]];
    ok.then(|| "m1, delta1, phi, psi, m2, delta2".to_string()).ok_or_else(|| "algebra tables differ".into())
}

fn frobenius() -> Check {
    let fht = FrobeniusSystem::from_ht("Z[h,t]", MultiPoly::var(), MultiPoly::constant(Poly::var()));
    let bad: Vec<String> = frobenius_checks(&fht).into_iter().filter(|c| !c.ok).map(|c| c.name.to_string()).collect();
    bad.is_empty().then(|| "F_ht axioms".to_string()).ok_or_else(|| bad.join(", "))
}

fn corpus() -> Check {
    let presets: Vec<PresetSpec> = ["standard", "lee", "f_h(H=1)", "f_t(T=1)"].iter().map(|s| s.parse().unwrap()).collect();
    let mut n = 0;
    for e in links::entries() {
        let d = links::named(&e.name).unwrap().map_err(|err| format!("{}: {err}", e.name))?;
        let cube = build_cube(&d);
        let rc = reduce_pipeline(&cube).map_err(|err| format!("{}: {err}", e.name))?;
        rc.check_invariants().map_err(|m| format!("{}: {m}", e.name))?;
        let std = promote_numeric(&rc, &PresetSpec::plain(Preset::Standard).promotion().unwrap());
        if std.euler_characteristic() != state_sum(&d) {
            return Err(format!("{}: Euler characteristic differs from the state sum", e.name));
        }
        if d.n_crossings() > 7 {
            continue;
        }
        for p in &presets {
            let fast = promote_numeric(&rc, &p.promotion().unwrap()).homology().map_err(|e| e.to_string())?;
            let f = p.frobenius().unwrap().unwrap();
            let slow = naive_numeric(&cube, &f).map_err(|e| e.to_string())?.homology().map_err(|e| e.to_string())?;
            if fast != slow {
                return Err(format!("{} under {p}: pipeline and naive TQFT differ", e.name));
            }
        }
        n += 1;
    }
    Ok(format!("reduced complexes minimal, Euler = Jones, pipeline = naive on {n} small links"))
}

/// Runs every check; returns the report and whether all passed.
pub fn run(as_json: bool) -> (String, bool) {
    let checks: [(&str, fn() -> Check); 6] = [
        ("relations", relations),
        ("two-handle moves", handle_moves),
        ("delooping", delooping),
        ("algebra tables", tables),
        ("frobenius axioms", frobenius),
        ("corpus", corpus),
    ];
    let results: Vec<(&str, Check)> = checks.iter().map(|(n, f)| (*n, f())).collect();
    let ok = results.iter().all(|(_, r)| r.is_ok());
    let report = if as_json {
        let rows: Vec<_> = results
            .iter()
            .map(|(n, r)| match r {
                Ok(m) => json!({"check": n, "pass": true, "detail": m}),
                Err(m) => json!({"check": n, "pass": false, "detail": m}),
            })
            .collect();
        let mut s = serde_json::to_string_pretty(&json!({"pass": ok, "checks": rows})).unwrap();
        s.push('\n');
        s
    } else {
        results
            .iter()
            .map(|(n, r)| match r {
                Ok(m) => format!("PASS {n}: {m}\n"),
                Err(m) => format!("FAIL {n}: {m}\n"),
            })
            .collect()
    };
    (report, ok)
}
