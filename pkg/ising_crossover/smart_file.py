"""
smart_file module
===================
This module defines the class SmartFile and its methods.
"""

import json


class SmartFile:
    """
    File-like recorder that writes only when enabled.

    Verification runs write one record per check. In 'text' mode every
    message or record becomes a line as soon as it is written; in 'json'
    mode the records are collected and dumped as a single list when the
    file is closed.

    Attributes
    ----------
    enabled: bool
        Whether anything is written.
    file: file object or None
        The opened report file.
    report_format: str
        'text' or 'json'.
    records: list of dict
        Records collected in 'json' mode.

    Methods
    -------
    setup(file_name, report_format)
        enables the object and opens the file.
    write(message)
        writes `message` to the file.
    record(check)
        writes one check record.
    close()
        flushes pending records and closes the file.
    """
    def __init__(self):
        self.enabled = False
        self.file = None
        self.report_format = "text"
        self.records = []

    def setup(self, file_name: str, report_format: str = "text"):
        """
        Sets `enabled` to True and opens `file_name` for writing.

        Raises
        ------
        TypeError
            If `report_format` is neither 'text' nor 'json'.
        """
        if report_format not in ("text", "json"):
            raise TypeError(
                "Invalid value for 'report_format'. Use 'text' or 'json'."
            )
        self.enabled = True
        self.report_format = report_format
        self.file = open(file_name, "w")

    def write(self, message: str):
        """
        Writes `message` as a line in 'text' mode; ignored in 'json' mode.
        """
        if self.enabled and self.file and self.report_format == "text":
            self.file.write(message + "\n")

    def record(self, check):
        """
        Writes a check record, any object with an `as_dict()` method.
        """
        if not (self.enabled and self.file):
            return
        if self.report_format == "json":
            self.records.append(check.as_dict())
        else:
            self.write(str(check))

    def close(self):
        if self.enabled and self.file:
            if self.report_format == "json":
                json.dump(self.records, self.file, indent=2)
                self.file.write("\n")
            self.file.close()
