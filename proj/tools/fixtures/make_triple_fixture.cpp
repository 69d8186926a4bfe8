// Writes tests/fixtures/triple: three near-identical Horizon XSS reports on
// OpenSuse, Solaris and Debian, three more Horizon reports elsewhere, and
// unrelated filler CVEs. Embeddings come from textfeat::hashed_embeddings.
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <fmt/core.h>

#include "hal/corpus.hpp"
#include "hal/rng.hpp"
#include "hal/textfeat.hpp"

using namespace hal;

namespace {

CveRecord make(std::string id, std::string description, std::string product, double base, Date published) {
  CveRecord r;
  r.id = std::move(id);
  r.description = std::move(description);
  r.published = published;
  r.last_modified = published;
  r.status = CveStatus::Analyzed;
  r.cvss_base = base;
  r.cvss_version = CvssVersion::V2;
  r.affected_products = {std::move(product)};
  return r;
}

}  // namespace

int main(int argc, char** argv) {
  const std::filesystem::path dir = argc > 1 ? argv[1] : "tests/fixtures/triple";
  std::filesystem::create_directories(dir);

  const std::vector<NodeIdentity> catalog = {
      {"Debian 8.0", {"debian:debian_linux:8.0"}},   {"FreeBSD 10", {"freebsd:freebsd:10"}},
      {"OpenSuse 13", {"opensuse:opensuse:13"}},     {"Solaris 11.2", {"oracle:solaris:11.2"}},
      {"Ubuntu 14.04", {"canonical:ubuntu:14.04"}}, {"Windows 7", {"microsoft:windows_7:-"}},
  };

  std::vector<CveRecord> feed;
  feed.push_back(make("CVE-2014-0157",
                      "Cross-site scripting (XSS) vulnerability in the Horizon Orchestration dashboard in OpenStack "
                      "Dashboard (aka Horizon) allows remote attackers to inject arbitrary web script or HTML via "
                      "the description field of a Heat template.",
                      "opensuse:opensuse:13", 4.3, Date(2014, 4, 8)));
  feed.push_back(make("CVE-2015-3988",
                      "Multiple cross-site scripting (XSS) vulnerabilities in OpenStack Dashboard (Horizon) allow "
                      "remote authenticated users to inject arbitrary web script or HTML via the metadata to a "
                      "Glance image, Nova flavor or Host Aggregate.",
                      "oracle:solaris:11.2", 3.5, Date(2015, 6, 16)));
  feed.push_back(make("CVE-2016-4428",
                      "Cross-site scripting (XSS) vulnerability in OpenStack Dashboard (Horizon) allows remote "
                      "authenticated users to inject arbitrary web script or HTML by injecting an AngularJS "
                      "template in a dashboard form.",
                      "debian:debian_linux:8.0", 3.5, Date(2016, 7, 10)));
  feed.push_back(make("CVE-2014-3473",
                      "Cross-site scripting (XSS) vulnerability in the Orchestration dashboard in OpenStack "
                      "Dashboard (aka Horizon) allows remote attackers to inject arbitrary web script or HTML via "
                      "the description field of a Swift container.",
                      "canonical:ubuntu:14.04", 3.5, Date(2014, 7, 3)));
  feed.push_back(make("CVE-2014-3474",
                      "Cross-site scripting (XSS) vulnerability in OpenStack Dashboard (Horizon) allows remote "
                      "authenticated users to inject arbitrary web script or HTML via the description field of a "
                      "Network volume.",
                      "freebsd:freebsd:10", 3.5, Date(2014, 7, 3)));
  feed.push_back(make("CVE-2014-3475",
                      "Cross-site scripting (XSS) vulnerability in the dashboard in OpenStack Dashboard (Horizon) "
                      "allows remote authenticated users to inject arbitrary web script or HTML via the metadata "
                      "of a Nova instance.",
                      "microsoft:windows_7:-", 3.5, Date(2014, 7, 3)));

  const std::vector<std::string> components = {"kernel",   "bootloader", "printer spooler", "smb client",
                                                "font parser", "usb stack", "bluetooth daemon", "ntp service",
                                                "mail agent", "pdf renderer", "audio codec", "dhcp client"};
  const std::vector<std::string> flaws = {"integer overflow",  "use after free", "race condition",
                                          "null pointer dereference", "heap corruption", "format string",
                                          "path traversal",  "privilege check bypass"};
  const std::vector<std::string> effects = {"gain root privileges", "cause a denial of service",
                                            "read kernel memory",    "execute shellcode",
                                            "corrupt disk quotas",   "leak session tokens"};
  Rng rng(20140157);
  for (std::size_t i = 0; i < 36; ++i) {
    const auto& node = catalog[i % catalog.size()];
    const auto& comp = components[rng.index(components.size())];
    const auto& flaw = flaws[rng.index(flaws.size())];
    const auto& effect = effects[rng.index(effects.size())];
    const std::string text = fmt::format("A {} in the {} of {} lets local users {} through a crafted request number {}.",
                                         flaw, comp, node.name, effect, 700 + i * 13);
    const double base = std::round(rng.uniform(2.0, 10.0) * 10.0) / 10.0;
    feed.push_back(make(fmt::format("CVE-2016-{}", 20000 + i), text, *node.product_keys.begin(), base,
                        Date(2016, 1 + static_cast<unsigned>(i % 12), 5)));
  }

  std::vector<std::pair<std::string, std::string>> texts;
  for (const auto& r : feed) texts.emplace_back(r.id, r.description);
  const auto embeddings = textfeat::hashed_embeddings(texts, 16, 4428);

  std::ofstream(dir / "feed.jsonl") << serialize_cve_feed(feed);
  {
    std::ofstream out(dir / "catalog.json");
    write_catalog(out, catalog);
  }
  {
    std::ofstream out(dir / "embeddings.csv");
    textfeat::write_embeddings(out, embeddings);
  }
  std::cout << "wrote " << feed.size() << " CVEs to " << dir << '\n';
}
