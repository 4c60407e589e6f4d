use bookcell::alphabet;
use bookcell::config::{FieldRates, SimConfig};
use bookcell::energetics::{eat_gain, step_decay};
use bookcell::genome::{decode_expansion, encode_payload, read_step, text, Genome, PayloadLayout};
use bookcell::mechanics::{check_break, try_connect, MechParams};
use bookcell::neurocell::{hebb_update, NetShape};
use bookcell::world::mutation::{edit, mutate_division};
use bookcell::{Rng, Simulation};
use proptest::prelude::*;

fn symbols(min: usize, max: usize) -> impl Strategy<Value = Vec<u8>> {
    prop::collection::vec(prop::sample::select(alphabet::SYMBOLS.to_vec()), min..max)
}

fn layout() -> PayloadLayout {
    PayloadLayout::new(NetShape::new(6, 8), 8)
}

proptest! {
    #[test]
    fn genome_text_round_trips(book in symbols(0, 200), marker in symbols(0, 8), advance in symbols(1, 3)) {
        let g = Genome::new(book, marker, advance).unwrap();
        prop_assert_eq!(text::parse(&text::format(&g)).unwrap(), g);
    }

    #[test]
    fn reads_preserve_marker_and_advance_lengths(book in symbols(1, 600), start in 0usize..600, len in 1usize..4, advance in symbols(1, 2)) {
        let start = start % book.len();
        let marker: Vec<u8> = (0..len).map(|k| book[(start + k) % book.len()]).collect();
        let g = Genome::new(book, marker.clone(), advance.clone()).unwrap();
        if let Some(out) = read_step(&g, &layout()).unwrap() {
            prop_assert_eq!(out.next_bookmarker.len(), marker.len());
            prop_assert_eq!(out.next_advance.len(), advance.len());
            prop_assert!(alphabet::validate(&out.next_bookmarker).is_ok());
        }
    }

    #[test]
    fn payload_decode_is_a_fixed_point_of_encode(raw in symbols(700, 701)) {
        let l = layout();
        let (mut p, width) = decode_expansion(&raw, 0, &l).unwrap();
        // Copy positions are reduced modulo the book length on decode.
        p.copy_start %= width;
        p.copy_end %= width;
        let enc = encode_payload(&p, &l).unwrap();
        let (q, w) = decode_expansion(&enc, 0, &l).unwrap();
        prop_assert_eq!(w, enc.len());
        prop_assert_eq!(q, p);
    }

    #[test]
    fn mutations_stay_in_alphabet_and_bounds(book in symbols(0, 50), key in any::<u64>(), max in 1usize..60) {
        let mut rng = Rng::from_key(key);
        let mut b = book.clone();
        b.truncate(max);
        for _ in 0..20 {
            edit(&mut b, &mut rng, max);
            prop_assert!(b.len() <= max);
            prop_assert!(alphabet::validate(&b).is_ok());
        }
        let mut c = book.clone();
        prop_assert!(!mutate_division(&mut c, 0.0, &mut rng, 1000));
        prop_assert_eq!(c, book);
    }

    #[test]
    fn eat_gain_bounds(d in -1.0f64..2.0, ne in 0usize..7, np in 0usize..7, e in 0.0f64..100.0) {
        let g = eat_gain(d, ne, np, 6, e);
        prop_assert!(g >= 0.0 && g <= e);
        if ne <= np || d <= 0.0 {
            prop_assert_eq!(g, 0.0);
        }
    }

    #[test]
    fn bond_geometry(dist in 0.0f64..1.0, ra in 0.02f64..0.16, rb in 0.02f64..0.16) {
        let m = MechParams::default();
        let r = ra.min(rb);
        match try_connect(dist, ra, rb, &m) {
            Some(len) => {
                prop_assert!(dist <= 1.95 * r);
                prop_assert!(len <= 1.10 * r + 1e-15);
                prop_assert!(!check_break(dist.min(2.0 * len), len, &m));
            }
            None => prop_assert!(dist > 1.95 * r),
        }
    }

    #[test]
    fn hebb_is_linear(s in -10.0f64..10.0, x in -1.0f64..1.0, y in -1.0f64..1.0, ds in 0.0f64..1.0) {
        let a = hebb_update(s, x + y, ds) - s;
        let b = (hebb_update(s, x, ds) - s) + (hebb_update(s, y, ds) - s);
        prop_assert!((a - b).abs() <= 1e-12);
    }

    #[test]
    fn decay_is_monotone(e in 0.0f64..1e6, u in 0.0f64..1.0, dt in 0.0f64..0.99) {
        let next = step_decay(e, u, dt).unwrap();
        prop_assert!(next <= e && next >= 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn worlds_keep_invariants_under_heavy_mutation(seed in any::<u64>()) {
        let mut c = SimConfig::default();
        c.seed = seed;
        c.population.count = 8;
        c.energy.a = 1.5;
        c.adaptive.enabled = false;
        c.parallel = false;
        c.epoch = 60;
        c.fields = vec![FieldRates { alpha: 0.05, beta: 0.5 }, FieldRates { alpha: 0.2, beta: 1.0 }];
        let mut sim = Simulation::with_population(c).unwrap();
        for _ in 0..6 {
            sim.run(40).unwrap();
            for f in sim.fields() {
                prop_assert!(f.check_invariants().is_ok(), "{:?}", f.check_invariants());
                prop_assert!(f.cells().iter().all(|c| c.energy.is_finite() && c.energy >= 0.0));
            }
        }
    }
}
