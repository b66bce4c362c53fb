# Init file untuk package utils
