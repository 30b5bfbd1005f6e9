import math
from dataclasses import replace
from datetime import date

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from appkeep import features
from appkeep.features import (
    CONSERVATIVE,
    DEVELOPER,
    USER,
    FeatureSchema,
    build_developer_profiles,
    days_since_last_update,
    default_profile,
    dev_registered_domain,
    fit_schema,
    max_downloads_log,
    normalize_star_ratings,
    scalar_transforms,
    vectorize,
)
from appkeep.manifest import ActionGroups, PermissionGroups
from conftest import make_record

NO_PERMS = PermissionGroups()
NO_ACTS = ActionGroups()


def fit_on(records, variant=DEVELOPER):
    profiles = build_developer_profiles(records)
    return fit_schema(records, profiles, variant), profiles


class TestStarRatios:
    def test_whatsapp_five_star_ratio(self):
        r = make_record()
        ratios = normalize_star_ratings(r.star_counts(), r.ratings)
        assert ratios[4] == pytest.approx(100_000_000 / 114_391_572, abs=1e-15)

    def test_zero_ratings_gives_zeros(self):
        assert normalize_star_ratings((0, 0, 0, 0, 0), 0) == (0.0,) * 5

    def test_uniform_counts(self):
        assert normalize_star_ratings((1, 1, 1, 1, 1), 5) == (0.2,) * 5

    @given(
        st.tuples(*[st.integers(0, 10**6)] * 5),
        st.integers(0, 10**7),
    )
    def test_ratios_bounded(self, counts, extra):
        ratings = sum(counts) + extra
        ratios = normalize_star_ratings(counts, ratings)
        assert all(0.0 <= x <= 1.0 for x in ratios)
        assert sum(ratios) <= 1.0 + 1e-9


class TestDownloadsLog:
    def test_store_range(self):
        assert max_downloads_log((5_000, 10_000)) == 4.0

    def test_zero(self):
        assert max_downloads_log((0, 0)) == 0.0

    def test_five_billion(self):
        assert max_downloads_log((5_000_000_000, 5_000_000_000)) == pytest.approx(
            math.log10(5e9), abs=1e-15
        )


class TestScalarTransforms:
    def test_whatsapp_values(self, whatsapp_record):
        scalars = scalar_transforms(whatsapp_record)
        assert scalars["LenTitle"] == 18
        assert scalars["Paid"] == 0.0
        assert scalars["LastUpdated"] == 2020
        assert scalars["FileSize"] == 0.0
        assert scalars["PrivacyPolicyLink"] == 1.0
        assert scalars["DeveloperWebsite"] == 1.0

    def test_varies_with_device_size(self):
        scalars = scalar_transforms(make_record(file_size="Varies with device"))
        assert scalars["FileSize"] == 1.0

    def test_absent_whats_new_len_zero(self):
        assert scalar_transforms(make_record(whats_new=None))["LenWhatsNew"] == 0.0

    def test_paid_app(self):
        assert scalar_transforms(make_record(price=0.99))["Paid"] == 1.0


class TestDaysSinceUpdate:
    def test_most_recent_app_gets_zero(self):
        d = date(2019, 6, 1)
        assert days_since_last_update(d, d) == 0

    def test_calendar_arithmetic(self):
        assert days_since_last_update(date(2019, 5, 22), date(2019, 6, 1)) == 10

    def test_future_date_clamps_to_zero(self):
        assert days_since_last_update(date(2019, 7, 1), date(2019, 6, 1)) == 0


class TestRegisteredDomain:
    def test_own_domain(self):
        assert dev_registered_domain("https://www.whatsapp.com/") == 1

    def test_shared_hosting(self):
        assert dev_registered_domain("https://sites.google.com/view/x") == 0

    def test_absent(self):
        assert dev_registered_domain(None) == 0

    def test_unparseable(self):
        assert dev_registered_domain("http://[broken") == 0

    def test_subdomain_of_shared_host(self):
        assert dev_registered_domain("https://myapp.blogspot.com/") == 0


class TestDeveloperProfiles:
    def _dev_records(self, count, downloads=5_000):
        return [
            make_record(developer_name="dev", title=f"app {i}", downloads=(downloads, downloads))
            for i in range(count)
        ]

    def test_single_app_conservative(self):
        profile = build_developer_profiles(self._dev_records(1))["dev"]
        assert profile.category == CONSERVATIVE
        assert profile.is_spamming == 0

    def test_aggressive_low_download_spammer(self):
        profile = build_developer_profiles(self._dev_records(51, downloads=5_000))["dev"]
        assert profile.category == "Aggressive"
        assert profile.is_spamming == 1

    def test_one_big_app_blocks_spamming(self):
        records = self._dev_records(50, downloads=5_000)
        records.append(make_record(developer_name="dev", downloads=(2_000_000, 2_000_000)))
        profile = build_developer_profiles(records)["dev"]
        assert profile.category == "Aggressive"
        assert profile.is_spamming == 0

    def test_band_edges(self):
        assert build_developer_profiles(self._dev_records(9))["dev"].category == "Moderate"
        assert build_developer_profiles(self._dev_records(10))["dev"].category == "Active"
        assert build_developer_profiles(self._dev_records(50))["dev"].category == "Active"
        assert build_developer_profiles(self._dev_records(2))["dev"].category == "Moderate"

    def test_high_mean_blocks_spamming(self):
        profile = build_developer_profiles(self._dev_records(51, downloads=50_000))["dev"]
        assert profile.is_spamming == 0


class TestFitSchema:
    def test_vocabulary_from_observed_categories(self):
        records = [
            make_record(genre="Casino"),
            make_record(genre="Casino"),
            make_record(genre="Tools"),
        ]
        schema, _ = fit_on(records)
        assert schema.vocabularies["Genre"] == ["Casino", "Tools"]

    def test_developer_variant_excludes_post_deployment_features(self):
        schema, _ = fit_on([make_record()], DEVELOPER)
        for name in features.POST_DEPLOYMENT_FEATURES:
            assert not any(fn == name or fn.startswith(name + "_") for fn in schema.feature_names)

    def test_user_variant_is_ten_wider(self):
        records = [make_record(genre=g) for g in ("A", "B", "C")]
        user_schema, _ = fit_on(records, USER)
        dev_schema, _ = fit_on(records, DEVELOPER)
        assert user_schema.total_width == dev_schema.total_width + 10

    def test_max_last_updated(self):
        records = [
            make_record(last_updated=date(2019, 1, 1)),
            make_record(last_updated=date(2019, 6, 1)),
        ]
        schema, _ = fit_on(records)
        assert schema.max_last_updated == date(2019, 6, 1)

    def test_empty_input_rejected(self):
        with pytest.raises(ValueError):
            fit_schema([], {}, DEVELOPER)

    def test_roundtrip_through_dict(self):
        schema, _ = fit_on([make_record()], USER)
        clone = FeatureSchema.from_dict(schema.to_dict())
        assert clone.feature_names == schema.feature_names
        assert clone.vocabularies == schema.vocabularies
        assert clone.max_last_updated == schema.max_last_updated


class TestVectorize:
    def test_deterministic(self, whatsapp_record):
        schema, profiles = fit_on([whatsapp_record], USER)
        profile = profiles[whatsapp_record.developer_name]
        a = vectorize(whatsapp_record, NO_PERMS, NO_ACTS, profile, schema)
        b = vectorize(whatsapp_record, NO_PERMS, NO_ACTS, profile, schema)
        assert np.array_equal(a, b)

    def test_one_hot_blocks_have_exactly_one_hit_in_vocab(self, whatsapp_record):
        schema, profiles = fit_on([whatsapp_record], USER)
        vec = vectorize(whatsapp_record, NO_PERMS, NO_ACTS, None, schema)
        for name, kind, offset, width in schema._offsets:
            if kind == "cat":
                assert vec[offset : offset + width].sum() == 1.0, name

    def test_unseen_genre_encodes_as_zero_block(self, whatsapp_record):
        schema, _ = fit_on([whatsapp_record], USER)
        novel = make_record(genre="Brand New Genre")
        vec = vectorize(novel, NO_PERMS, NO_ACTS, None, schema)
        for name, kind, offset, width in schema._offsets:
            if name == "Genre":
                assert vec[offset : offset + width].sum() == 0.0

    def test_permission_flags_copied(self, whatsapp_record):
        schema, _ = fit_on([whatsapp_record], USER)
        vec = vectorize(
            whatsapp_record,
            PermissionGroups(contacts=1, sms=1),
            NO_ACTS,
            None,
            schema,
        )
        names = schema.feature_names
        assert vec[names.index("Contacts")] == 1.0
        assert vec[names.index("SMS")] == 1.0
        assert vec[names.index("Camera")] == 0.0

    def test_no_manifest_permissions_gives_nine_zeros(self, whatsapp_record):
        schema, _ = fit_on([whatsapp_record], USER)
        vec = vectorize(whatsapp_record, NO_PERMS, NO_ACTS, None, schema)
        names = schema.feature_names
        perm_cols = [names.index(n) for n in ("Storage", "Calendar", "Camera", "Contacts",
                                              "Location", "Microphone", "Phone", "Sensors", "SMS")]
        assert vec[perm_cols].sum() == 0.0

    def test_vector_is_finite(self, whatsapp_record):
        schema, _ = fit_on([whatsapp_record], USER)
        vec = vectorize(whatsapp_record, NO_PERMS, NO_ACTS, None, schema)
        assert np.isfinite(vec).all()

    def test_developer_variant_ignores_post_deployment_fields(self, whatsapp_record):
        schema, profiles = fit_on([whatsapp_record], DEVELOPER)
        base = vectorize(whatsapp_record, NO_PERMS, NO_ACTS, None, schema)
        mutated_record = replace(
            whatsapp_record,
            one_star_ratings=7,
            two_star_ratings=7,
            three_star_ratings=7,
            four_star_ratings=7,
            five_star_ratings=7,
            ratings=100,
            reviews_average=1.1,
            whats_new="something entirely different",
            downloads=(10, 10),
            last_updated=date(2016, 1, 1),
        )
        mutated = vectorize(mutated_record, NO_PERMS, NO_ACTS, None, schema)
        assert np.array_equal(base, mutated)

    def test_days_since_update_attains_zero_on_training_max(self):
        records = [
            make_record(last_updated=date(2019, 1, 1)),
            make_record(last_updated=date(2019, 6, 1)),
        ]
        schema, profiles = fit_on(records, USER)
        col = schema.feature_names.index("DaysSinceLastUpdate")
        values = [
            vectorize(r, NO_PERMS, NO_ACTS, None, schema)[col] for r in records
        ]
        assert 0.0 in values

    def test_unknown_developer_defaults_conservative(self, whatsapp_record):
        schema, _ = fit_on([whatsapp_record], USER)
        vec = vectorize(make_record(developer_name="nobody"), NO_PERMS, NO_ACTS, None, schema)
        names = schema.feature_names
        assert vec[names.index("IsSpamming")] == 0.0
        cons = names.index("DeveloperCategory_Conservative")
        assert vec[cons] == 1.0


class TestDefaultProfile:
    def test_shape(self):
        profile = default_profile("x")
        assert profile.category == CONSERVATIVE
        assert profile.is_spamming == 0
        assert profile.app_count == 1
