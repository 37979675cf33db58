"""Exercises the ledgerlab_py bindings end to end.

Build first:  pip install --no-build-isolation ./crates/python
"""

import json

import ledgerlab_py as ll


def check(cond, what):
    if not cond:
        raise SystemExit(f"FAIL {what}")
    print(f"ok   {what}")


def main():
    check(ll.hash(b"abc").startswith("ba7816bf"), "sha-256 of 'abc'")

    issuer = ll.KeyPair(b"issuer")
    alice, bob = ll.KeyPair(b"alice"), ll.KeyPair(b"bob")
    sig = alice.sign(b"hello")
    check(ll.verify(alice.public_key, b"hello", sig), "signature verifies")
    check(not ll.verify(bob.public_key, b"hello", sig), "wrong key rejects")

    naive = ll.AccountLedger()
    naive.mint(alice.address, 10)
    tx = naive.transfer(alice, bob.address, 3)
    for _ in range(3):
        naive.apply(tx)
    check(naive.balance(bob.address) == 9, "naive account replays a signed transfer")

    guarded = ll.AccountLedger(nonce_protected=True)
    guarded.mint(alice.address, 10)
    tx = guarded.transfer(alice, bob.address, 3)
    guarded.apply(tx)
    try:
        guarded.apply(tx)
        replayed = True
    except ValueError:
        replayed = False
    check(not replayed and guarded.balance(bob.address) == 3, "nonce stops the replay")
    check(guarded.total_supply() == 10, "account total conserved")

    reg = ll.TokenRegistry()
    reg.issue("o1", 5, alice.address)
    reg.transfer("o1", alice.address, bob.address)
    check(reg.owner("o1") == bob.address, "token changes owner only")
    check(json.loads(reg.snapshot_json())["kernel"] == "token", "token snapshot")

    chain = ll.Chainstate(issuer.public_key)
    try:
        chain.issue(alice, [(alice.address, 50)])
        forged = True
    except ValueError:
        forged = False
    check(not forged, "non-issuer coinbase rejected")
    cb = chain.issue(issuer, [(alice.address, 50)])
    pay = chain.split(cb.output_id(0), alice, bob.address, 20)
    chain.apply(pay)
    check(sorted(pay.output_values()) == [20, 30], "split outputs")
    check(chain.total_active_value() == 50, "utxo value conserved")
    check(chain.validate(pay) != [], "double spend flagged")
    steps = json.loads(chain.trace(pay.output_id(0)))["steps"]
    check(len(steps) == 2, "lineage reaches the coinbase")

    mint = ll.Mint([1, 5], b"mint", wallet_seed=7)
    coin = mint.withdraw(5)
    check(mint.redeem(coin) == "accept", "first deposit accepted")
    check(mint.redeem(coin) == "already-spent", "double deposit rejected")

    tables = json.loads(ll.tables_report(0))
    check(tables["double_spend"]["utxo"]["outcome"] == "prevented", "tables report")
    check("UTXO-based vs account-based" in ll.render_tables(0), "tables text")

    fraud = json.loads(ll.run_fraud_scenario("replay", "account-naive", 3))
    check(fraud["outcome"] == "succeeded", "fraud scenario")

    fresh = ll.pseudonym_growth(10, policy="fresh-address-per-payment", kernel="account")
    reuse = ll.pseudonym_growth(10, policy="reuse-address", kernel="account")
    check(fresh[-1] > reuse[-1], "fresh addresses grow the account set")

    print("all smoke checks passed")


if __name__ == "__main__":
    main()
