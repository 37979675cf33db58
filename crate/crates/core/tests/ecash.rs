use std::sync::Arc;
use std::thread;

use ledgerlab::crypto::{blind, blind_sign, unblind, verify, BlindingFactor};
use ledgerlab::ecash::{issuer_setup, pay, withdraw, Issuer, Redemption, RejectReason};
use ledgerlab::{Amount, CryptoMode};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

fn issuer() -> Issuer {
    Issuer::new(issuer_setup(&[Amount::new(1), Amount::new(5)], b"ecash-tests", CryptoMode::Toy).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn unblinded_signature_verifies(serial in proptest::collection::vec(any::<u8>(), 1..64), seed in any::<u64>()) {
        let kp = ledgerlab::keygen(b"ecash-blind");
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let r = BlindingFactor::random(&kp.public, &mut rng);
        let blinded = blind(&serial, &r, &kp.public).unwrap();
        let sig = unblind(&blind_sign(&kp.private, &blinded).unwrap(), &r, &kp.public).unwrap();
        prop_assert!(verify(&kp.public, &serial, &sig));
        prop_assert_eq!(sig, kp.sign(&serial));
    }
}

#[test]
fn second_deposit_is_rejected_in_any_order() {
    let issuer = issuer();
    let mut rng = ChaCha20Rng::seed_from_u64(1);
    let coins: Vec<_> = (0..5).map(|_| withdraw(&issuer, Amount::new(5), &mut rng).unwrap()).collect();
    let mut deposits: Vec<_> = coins.iter().chain(coins.iter()).cloned().collect();
    deposits.shuffle(&mut rng);
    let accepted = deposits.into_iter().filter(|c| pay(&issuer, c.clone()).is_accept()).count();
    assert_eq!(accepted, coins.len());
}

#[test]
fn concurrent_deposits_accept_exactly_once() {
    for round in 0..20u64 {
        let issuer = Arc::new(issuer());
        let mut rng = ChaCha20Rng::seed_from_u64(round);
        let coin = withdraw(&issuer, Amount::new(1), &mut rng).unwrap();
        let handles: Vec<_> = (0..8)
            .map(|_| {
                let (issuer, coin) = (Arc::clone(&issuer), coin.clone());
                thread::spawn(move || issuer.redeem(&coin))
            })
            .collect();
        let results: Vec<Redemption> = handles.into_iter().map(|h| h.join().unwrap()).collect();
        assert_eq!(results.iter().filter(|r| r.is_accept()).count(), 1);
        assert!(results
            .iter()
            .filter(|r| !r.is_accept())
            .all(|r| *r == Redemption::Reject(RejectReason::AlreadySpent)));
    }
}

#[test]
fn forged_and_misdenominated_coins_are_rejected() {
    let issuer = issuer();
    let mut rng = ChaCha20Rng::seed_from_u64(3);
    let mut coin = withdraw(&issuer, Amount::new(1), &mut rng).unwrap();
    coin.denomination = Amount::new(5);
    assert_eq!(pay(&issuer, coin.clone()), Redemption::Reject(RejectReason::BadSignature));
    coin.denomination = Amount::new(7);
    assert_eq!(pay(&issuer, coin), Redemption::Reject(RejectReason::UnknownDenomination));
}

#[test]
fn transcript_shares_no_bytes_with_deposits() {
    let issuer = issuer();
    let mut rng = ChaCha20Rng::seed_from_u64(4);
    let coins: Vec<_> = (0..20).map(|_| withdraw(&issuer, Amount::new(1), &mut rng).unwrap()).collect();
    for c in &coins {
        assert!(pay(&issuer, c.clone()).is_accept());
    }
    for t in issuer.transcript() {
        for c in &coins {
            assert_ne!(t.blinded.as_bytes(), c.serial.as_slice());
            assert_ne!(t.blinded_signature.as_bytes(), c.signature.as_bytes());
        }
    }
}
