use proptest::prelude::*;

use cubedual::cubical::Construction;
use cubedual::duality::{check_dual_pairing, map_diagram_dual, sphere_pair, torus_pair};
use cubedual::engine::InternalEngine;
use cubedual::image::GrayscaleImage;
use cubedual::persistence::{
    compute_diagram, diagram, rank_pairing_oracle_with_limit, reduce, sort_cells_with, BoundaryMatrix,
    PersistenceDiagram, StandardReduction, TieBreak,
};
use cubedual::transform::{choose_n, t_from_v, transform_with_n, v_from_t};
use cubedual::verify::{check_image, CheckStatus, VerifyOptions};

fn image(max_dim: usize, max_side: usize, min_side: usize) -> impl Strategy<Value = GrayscaleImage> {
    prop::collection::vec(min_side..=max_side, 1..=max_dim).prop_flat_map(|dims| {
        let len: usize = dims.iter().product();
        prop::collection::vec(0i32..=9, len)
            .prop_map(move |v| GrayscaleImage::new(dims.clone(), v.into_iter().map(f64::from).collect()).unwrap())
    })
}

fn direct(img: &GrayscaleImage, c: Construction) -> PersistenceDiagram {
    compute_diagram(&c.build(img, false).unwrap(), &StandardReduction).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn tie_breaks_do_not_change_the_diagram(img in image(3, 3, 1)) {
        for c in [Construction::V, Construction::T] {
            let cx = c.build(&img, false).unwrap();
            let mut diagrams = Vec::new();
            for tie in [TieBreak::LabelAscending, TieBreak::LabelDescending, TieBreak::CreationOrder] {
                let ord = sort_cells_with(&cx, tie).unwrap();
                let p = reduce(&BoundaryMatrix::from_complex(&cx, &ord));
                diagrams.push(diagram(&p, &ord, &cx));
            }
            prop_assert_eq!(&diagrams[0], &diagrams[1]);
            prop_assert_eq!(&diagrams[0], &diagrams[2]);
        }
    }

    #[test]
    fn box_diagrams_have_one_essential_class(img in image(3, 4, 1)) {
        for c in [Construction::V, Construction::T] {
            let dgm = direct(&img, c);
            let essential: Vec<_> = dgm.essential().copied().collect();
            prop_assert_eq!(essential.len(), 1);
            prop_assert_eq!(essential[0].dim, 0);
            prop_assert_eq!(essential[0].birth, img.min_value());
        }
    }

    #[test]
    fn torus_essentials_are_binomial(img in image(3, 3, 2)) {
        let d = img.ndim();
        for c in [Construction::V, Construction::T] {
            let dgm = compute_diagram(&c.build(&img, true).unwrap(), &StandardReduction).unwrap();
            for k in 0..=d {
                let binom = (0..k).fold(1usize, |acc, i| acc * (d - i) / (i + 1));
                prop_assert_eq!(dgm.essential_count(k), binom);
            }
        }
    }

    #[test]
    fn reduction_matches_oracle(img in image(3, 3, 1)) {
        for c in [Construction::V, Construction::T] {
            let cx = c.build(&img, false).unwrap();
            let ord = sort_cells_with(&cx, TieBreak::default()).unwrap();
            let d = BoundaryMatrix::from_complex(&cx, &ord);
            prop_assert_eq!(reduce(&d), rank_pairing_oracle_with_limit(&d, 1024).unwrap());
        }
    }

    #[test]
    fn transforms_are_exact(img in image(3, 4, 1)) {
        prop_assert_eq!(t_from_v(&img, &InternalEngine::new(Construction::V)).unwrap(), direct(&img, Construction::T));
        prop_assert_eq!(v_from_t(&img, &InternalEngine::new(Construction::T)).unwrap(), direct(&img, Construction::V));
    }

    #[test]
    fn any_valid_shell_gives_the_same_transform(img in image(2, 4, 1), extra in 0.5f64..1000.0) {
        for c in [Construction::V, Construction::T] {
            let engine = InternalEngine::new(c);
            let a = transform_with_n(&img, &engine, choose_n(&img)).unwrap();
            let b = transform_with_n(&img, &engine, img.max_value() + extra).unwrap();
            prop_assert_eq!(a, b);
        }
    }

    #[test]
    fn dual_pairs_pass(img in image(3, 3, 2)) {
        for c in [Construction::V, Construction::T] {
            prop_assert!(torus_pair(&img, c).unwrap().check(&StandardReduction).unwrap().pass);
            prop_assert!(sphere_pair(&img, c, choose_n(&img)).unwrap().check(&StandardReduction).unwrap().pass);
        }
        let cx = Construction::V.build(&img, true).unwrap();
        prop_assert!(check_dual_pairing(&cx, img.ndim()).unwrap().pass);
    }

    #[test]
    fn dual_map_is_an_involution(img in image(2, 4, 2)) {
        let dgm = compute_diagram(&Construction::T.build(&img, true).unwrap(), &StandardReduction).unwrap();
        let d = img.ndim();
        prop_assert_eq!(map_diagram_dual(&map_diagram_dual(&dgm, d).unwrap(), d).unwrap(), dgm);
    }

    #[test]
    fn diagram_text_formats_round_trip(img in image(2, 4, 1)) {
        let dgm = direct(&img, Construction::V);
        prop_assert_eq!(PersistenceDiagram::from_csv(&dgm.to_csv()).unwrap(), dgm.clone());
        prop_assert_eq!(PersistenceDiagram::from_json(&dgm.to_json()).unwrap(), dgm);
    }

    #[test]
    fn shifting_values_shifts_the_diagram(img in image(2, 4, 1), shift in -50i32..50) {
        let shifted = GrayscaleImage::new(
            img.dims().to_vec(),
            img.values().iter().map(|v| v + f64::from(shift)).collect(),
        ).unwrap();
        for c in [Construction::V, Construction::T] {
            let want: PersistenceDiagram = direct(&img, c)
                .iter()
                .map(|iv| {
                    let mut iv = *iv;
                    iv.birth += f64::from(shift);
                    if let cubedual::persistence::Death::Finite(q) = iv.death {
                        iv.death = cubedual::persistence::Death::Finite(q + f64::from(shift));
                    }
                    iv
                })
                .collect();
            prop_assert_eq!(direct(&shifted, c), want);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn full_check_suite_passes(img in image(3, 3, 1)) {
        for result in check_image(&img, &VerifyOptions { oracle_limit: 1024, inject_fault: false }) {
            prop_assert!(
                !matches!(result.status, CheckStatus::Fail(_)),
                "{}: {:?}", result.name, result.status
            );
        }
    }
}
