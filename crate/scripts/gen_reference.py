#!/usr/bin/env python3
"""Regenerate data/unsd_countries.csv (country list with M49-style subregions).

The list is a snapshot of ISO-3166-coded countries and areas with their
UNSD subregion. Taiwan is intentionally absent (added via adjustments);
Antarctica carries a non-standard subregion and is excluded by the default
adjustment file.
"""
import csv
import sys

SUBREGIONS = {
    "Northern Africa": [
        ("DZA", "Algeria"), ("EGY", "Egypt"), ("LBY", "Libya"),
        ("MAR", "Morocco"), ("SDN", "Sudan"), ("TUN", "Tunisia"),
        ("ESH", "Western Sahara"),
    ],
    "Sub-Saharan Africa": [
        ("AGO", "Angola"), ("BDI", "Burundi"), ("BEN", "Benin"),
        ("BFA", "Burkina Faso"), ("BWA", "Botswana"),
        ("CAF", "Central African Republic"), ("CIV", "Cote d'Ivoire"),
        ("CMR", "Cameroon"), ("COD", "Democratic Republic of the Congo"),
        ("COG", "Congo"), ("COM", "Comoros"), ("CPV", "Cabo Verde"),
        ("DJI", "Djibouti"), ("ERI", "Eritrea"), ("ETH", "Ethiopia"),
        ("GAB", "Gabon"), ("GHA", "Ghana"), ("GIN", "Guinea"),
        ("GMB", "Gambia"), ("GNB", "Guinea-Bissau"),
        ("GNQ", "Equatorial Guinea"), ("IOT", "British Indian Ocean Territory"),
        ("ATF", "French Southern Territories"), ("KEN", "Kenya"),
        ("LBR", "Liberia"), ("LSO", "Lesotho"), ("MDG", "Madagascar"),
        ("MLI", "Mali"), ("MOZ", "Mozambique"), ("MRT", "Mauritania"),
        ("MUS", "Mauritius"), ("MWI", "Malawi"), ("MYT", "Mayotte"),
        ("NAM", "Namibia"), ("NER", "Niger"), ("NGA", "Nigeria"),
        ("REU", "Reunion"), ("RWA", "Rwanda"), ("SEN", "Senegal"),
        ("SHN", "Saint Helena"), ("SLE", "Sierra Leone"),
        ("SOM", "Somalia"), ("SSD", "South Sudan"),
        ("STP", "Sao Tome and Principe"), ("SWZ", "Eswatini"),
        ("SYC", "Seychelles"), ("TCD", "Chad"), ("TGO", "Togo"),
        ("TZA", "United Republic of Tanzania"), ("UGA", "Uganda"),
        ("ZAF", "South Africa"), ("ZMB", "Zambia"), ("ZWE", "Zimbabwe"),
    ],
    "Latin America/Caribbean": [
        ("ABW", "Aruba"), ("AIA", "Anguilla"), ("ARG", "Argentina"),
        ("ATG", "Antigua and Barbuda"),
        ("BES", "Bonaire, Sint Eustatius and Saba"), ("BHS", "Bahamas"),
        ("BLM", "Saint Barthelemy"), ("BLZ", "Belize"), ("BOL", "Bolivia"),
        ("BRA", "Brazil"), ("BRB", "Barbados"), ("CHL", "Chile"),
        ("COL", "Colombia"), ("CRI", "Costa Rica"), ("CUB", "Cuba"),
        ("CUW", "Curacao"), ("CYM", "Cayman Islands"), ("DMA", "Dominica"),
        ("DOM", "Dominican Republic"), ("ECU", "Ecuador"),
        ("FLK", "Falkland Islands (Malvinas)"), ("GLP", "Guadeloupe"),
        ("GRD", "Grenada"), ("GTM", "Guatemala"), ("GUF", "French Guiana"),
        ("GUY", "Guyana"), ("HND", "Honduras"), ("HTI", "Haiti"),
        ("JAM", "Jamaica"), ("KNA", "Saint Kitts and Nevis"),
        ("LCA", "Saint Lucia"), ("MAF", "Saint Martin (French part)"),
        ("MEX", "Mexico"), ("MSR", "Montserrat"), ("MTQ", "Martinique"),
        ("NIC", "Nicaragua"), ("PAN", "Panama"), ("PER", "Peru"),
        ("PRI", "Puerto Rico"), ("PRY", "Paraguay"),
        ("SGS", "South Georgia and the South Sandwich Islands"),
        ("SLV", "El Salvador"), ("SUR", "Suriname"),
        ("SXM", "Sint Maarten (Dutch part)"),
        ("TCA", "Turks and Caicos Islands"),
        ("TTO", "Trinidad and Tobago"), ("URY", "Uruguay"),
        ("VCT", "Saint Vincent and the Grenadines"), ("VEN", "Venezuela"),
        ("VGB", "British Virgin Islands"),
        ("VIR", "United States Virgin Islands"),
    ],
    "Northern America": [
        ("BMU", "Bermuda"), ("CAN", "Canada"), ("GRL", "Greenland"),
        ("SPM", "Saint Pierre and Miquelon"),
        ("USA", "United States of America"),
    ],
    "Central Asia": [
        ("KAZ", "Kazakhstan"), ("KGZ", "Kyrgyzstan"), ("TJK", "Tajikistan"),
        ("TKM", "Turkmenistan"), ("UZB", "Uzbekistan"),
    ],
    "Eastern Asia": [
        ("CHN", "China"), ("HKG", "China, Hong Kong SAR"), ("JPN", "Japan"),
        ("KOR", "Republic of Korea"), ("MAC", "China, Macao SAR"),
        ("MNG", "Mongolia"),
        ("PRK", "Democratic People's Republic of Korea"),
    ],
    "South-eastern Asia": [
        ("BRN", "Brunei Darussalam"), ("IDN", "Indonesia"),
        ("KHM", "Cambodia"), ("LAO", "Lao People's Democratic Republic"),
        ("MMR", "Myanmar"), ("MYS", "Malaysia"), ("PHL", "Philippines"),
        ("SGP", "Singapore"), ("THA", "Thailand"), ("TLS", "Timor-Leste"),
        ("VNM", "Viet Nam"),
    ],
    "Southern Asia": [
        ("AFG", "Afghanistan"), ("BGD", "Bangladesh"), ("BTN", "Bhutan"),
        ("IND", "India"), ("IRN", "Iran (Islamic Republic of)"),
        ("LKA", "Sri Lanka"), ("MDV", "Maldives"), ("NPL", "Nepal"),
        ("PAK", "Pakistan"),
    ],
    "Western Asia": [
        ("ARE", "United Arab Emirates"), ("ARM", "Armenia"),
        ("AZE", "Azerbaijan"), ("BHR", "Bahrain"), ("CYP", "Cyprus"),
        ("GEO", "Georgia"), ("IRQ", "Iraq"), ("ISR", "Israel"),
        ("JOR", "Jordan"), ("KWT", "Kuwait"), ("LBN", "Lebanon"),
        ("OMN", "Oman"), ("PSE", "State of Palestine"), ("QAT", "Qatar"),
        ("SAU", "Saudi Arabia"), ("SYR", "Syrian Arab Republic"),
        ("TUR", "Turkiye"), ("YEM", "Yemen"),
    ],
    "Eastern Europe": [
        ("BGR", "Bulgaria"), ("BLR", "Belarus"), ("CZE", "Czechia"),
        ("HUN", "Hungary"), ("MDA", "Republic of Moldova"),
        ("POL", "Poland"), ("ROU", "Romania"),
        ("RUS", "Russian Federation"), ("SVK", "Slovakia"),
        ("UKR", "Ukraine"),
    ],
    "Northern Europe": [
        ("ALA", "Aland Islands"), ("DNK", "Denmark"), ("EST", "Estonia"),
        ("FIN", "Finland"), ("FRO", "Faroe Islands"),
        ("GBR", "United Kingdom of Great Britain and Northern Ireland"),
        ("GGY", "Guernsey"), ("IMN", "Isle of Man"), ("IRL", "Ireland"),
        ("ISL", "Iceland"), ("JEY", "Jersey"), ("LTU", "Lithuania"),
        ("LVA", "Latvia"), ("NOR", "Norway"),
        ("SJM", "Svalbard and Jan Mayen Islands"), ("SWE", "Sweden"),
    ],
    "Southern Europe": [
        ("ALB", "Albania"), ("AND", "Andorra"),
        ("BIH", "Bosnia and Herzegovina"), ("ESP", "Spain"),
        ("GIB", "Gibraltar"), ("GRC", "Greece"), ("HRV", "Croatia"),
        ("ITA", "Italy"), ("MKD", "North Macedonia"), ("MLT", "Malta"),
        ("MNE", "Montenegro"), ("PRT", "Portugal"), ("SMR", "San Marino"),
        ("SRB", "Serbia"), ("SVN", "Slovenia"), ("VAT", "Holy See"),
    ],
    "Western Europe": [
        ("AUT", "Austria"), ("BEL", "Belgium"), ("CHE", "Switzerland"),
        ("DEU", "Germany"), ("FRA", "France"), ("LIE", "Liechtenstein"),
        ("LUX", "Luxembourg"), ("MCO", "Monaco"), ("NLD", "Netherlands"),
    ],
    "Australia/New Zealand": [
        ("AUS", "Australia"), ("CCK", "Cocos (Keeling) Islands"),
        ("CXR", "Christmas Island"),
        ("HMD", "Heard Island and McDonald Islands"),
        ("NFK", "Norfolk Island"), ("NZL", "New Zealand"),
    ],
    "Melanesia": [
        ("FJI", "Fiji"), ("NCL", "New Caledonia"),
        ("PNG", "Papua New Guinea"), ("SLB", "Solomon Islands"),
        ("VUT", "Vanuatu"),
    ],
    "Micronesia": [
        ("FSM", "Micronesia (Federated States of)"), ("GUM", "Guam"),
        ("KIR", "Kiribati"), ("MHL", "Marshall Islands"),
        ("MNP", "Northern Mariana Islands"), ("NRU", "Nauru"),
        ("PLW", "Palau"),
        ("UMI", "United States Minor Outlying Islands"),
    ],
    "Polynesia": [
        ("ASM", "American Samoa"), ("COK", "Cook Islands"), ("NIU", "Niue"),
        ("PCN", "Pitcairn"), ("PYF", "French Polynesia"),
        ("TKL", "Tokelau"), ("TON", "Tonga"), ("TUV", "Tuvalu"),
        ("WLF", "Wallis and Futuna Islands"), ("WSM", "Samoa"),
    ],
    "Antarctica": [
        ("ATA", "Antarctica"),
    ],
}


def main():
    rows = []
    seen = set()
    for subregion, countries in SUBREGIONS.items():
        for iso3, name in countries:
            assert iso3 not in seen, iso3
            seen.add(iso3)
            rows.append((iso3, name, subregion))
    rows.sort()
    # 247 rows; +TWN via adjustments, -4 exclusions -> 244 records.
    if len(rows) != 247:
        print(f"expected 247 rows, got {len(rows)}", file=sys.stderr)
        sys.exit(1)
    with open("data/unsd_countries.csv", "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["iso3", "name", "subregion"])
        w.writerows(rows)
    print(f"wrote data/unsd_countries.csv ({len(rows)} rows)")


if __name__ == "__main__":
    main()
