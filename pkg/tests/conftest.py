import sys
from datetime import date
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from appkeep.ingest import RawAppRecord


def make_record(**overrides) -> RawAppRecord:
    """Complete, filter-passing record with WhatsApp-like store-page values."""
    base = dict(
        description="WhatsApp Messenger is a FREE messaging app available for Android and other smartphones.",
        title="WhatsApp Messenger",
        last_updated=date(2020, 5, 13),
        whats_new="Group video and voice calls now support up to 8 participants.",
        reviews_average=4.3,
        price=0.0,
        ratings=114_391_572,
        one_star_ratings=4_000_000,
        two_star_ratings=2_000_000,
        three_star_ratings=2_391_572,
        four_star_ratings=6_000_000,
        five_star_ratings=100_000_000,
        privacy_policy_link="http://www.whatsapp.com/legal/#Privacy",
        genre="Communication",
        content_rating="PEGI 3",
        current_version="2.20.157",
        android_version="4.0.3 and up",
        developer_email="android@support.whatsapp.com",
        developer_website="https://www.whatsapp.com/",
        developer_name="WhatsApp Inc.",
        developer_address="1601 Willow Road Menlo Park, CA 94025",
        file_size="28M",
        downloads=(5_000_000_000, 5_000_000_000),
        status_checks=(False, False, False),
        manifest_source="<manifest package='com.whatsapp'/>",
        source_row=2,
    )
    base.update(overrides)
    return RawAppRecord(**base)


@pytest.fixture
def whatsapp_record() -> RawAppRecord:
    return make_record()


MINIMAL_MANIFEST = """<manifest xmlns:android="http://schemas.android.com/apk/res/android"
    package="com.example.app">
  <uses-permission android:name="android.permission.READ_CONTACTS"/>
</manifest>
"""

RECEIVER_MANIFEST = """<manifest xmlns:android="http://schemas.android.com/apk/res/android"
    package="com.example.app">
  <uses-permission android:name="android.permission.SEND_SMS"/>
  <uses-permission android:name="android.permission.INTERNET"/>
  <application>
    <receiver android:name=".BootReceiver">
      <intent-filter>
        <action android:name="android.intent.action.BOOT_COMPLETED"/>
        <action android:name="android.net.conn.CONNECTIVITY_CHANGE"/>
      </intent-filter>
    </receiver>
    <receiver android:name=".PushReceiver">
      <intent-filter>
        <action android:name="com.google.android.c2dm.intent.RECEIVE"/>
      </intent-filter>
    </receiver>
  </application>
</manifest>
"""
