"""Location extraction table: (title, body, expected) with expected as
(resolution, value) or None."""
CASES = [
    ("[US – IN] I've been living in my apartment for a year and a half...", "", ("us_state", "IN")),
    ("US, CA landlord won't fix heater", "", ("us_state", "CA")),
    ("Deposit question", "We rent in the SF Bay Area and the landlord kept everything.", ("us_state", "CA")),
    ("Ontario, Canada tenant rights?", "", ("non_us", "Ontario, Canada")),
    ("[TX] late fee every month", "", ("us_state", "TX")),
    ("[Brooklyn, NY] no heat", "", ("us_state", "NY")),
    ("[US-WA] mold in closet", "", ("us_state", "WA")),
    ("Landlord in New York won't return deposit", "", ("us_state", "NY")),
    ("help", "I rent an apartment in California near the coast.", ("us_state", "CA")),
    ("Rent increase in Chicago", "", ("us_state", "IL")),
    ("[England] deposit scheme", "", ("non_us", "England")),
    ("Help", "I live in British Columbia, Canada.", ("non_us", "British Columbia, Canada")),
    ("[Florida] roaches", "Also my lease says Texas somewhere.", ("us_state", "FL")),
    ("Eviction in Texas", "I moved from Ohio last year.", ("us_state", "TX")),
    ("[US] what are my rights?", "", ("unresolved", None)),
    # negatives
    ("I live in a house with my roommate", "Is this or that legal in my case?", None),
    ("Moving in or out", "Should I go in or stay?", None),
    ("My landlord is mean", "He says OK to everything but never fixes anything.", None),
    ("Can I paint the walls?", "I want to do it ME myself.", None),
    ("Deposit dispute", "They kept $500 of my deposit. Is that HI or low?", None),
    ("Noise complaint", "The guy upstairs is in a band, he plays at 3am.", None),
    ("Question about lease", "Our lease is a standard one, nothing special.", None),
    ("Pet rent", "my cat is an indoor cat and is very quiet", None),
    ("Sublet", "can I sublet in the summer? or is it not allowed", None),
    ("[Help] advice needed", "landlord entered without notice", None),
]
assert len(CASES) == 25 and sum(c[2] is None for c in CASES) == 10
